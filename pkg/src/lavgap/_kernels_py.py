"""NumPy twins of the compiled kernels in ``_kernels.pyx``.

Same signatures, same visiting order and tie-breaking; used when the
extension is not built or when ``LAVGAP_PURE=1``.
"""
import numpy as np

_CHUNK = 1 << 20


def _bucket_of(pts, ox, oy, bsize, nbx, nby):
    inv_bs = 1.0 / bsize
    fx = (pts[:, 0] - ox) * inv_bs
    fy = (pts[:, 1] - oy) * inv_bs
    ok = (fx >= 0.0) & (fy >= 0.0)
    ix = np.floor(np.where(ok, fx, 0.0)).astype(np.int64)
    iy = np.floor(np.where(ok, fy, 0.0)).astype(np.int64)
    ok &= (ix < nbx) & (iy < nby)
    return np.where(ok, iy * nbx + ix, -1)


def locate(pts, ox, oy, bsize, nbx, nby, bstart, bcells, cellmap, tol):
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    M = pts.shape[0]
    cell = np.full(M, -1, dtype=np.int64)
    bary = np.zeros((M, 3))
    b = _bucket_of(pts, ox, oy, bsize, nbx, nby)
    inside = b >= 0
    start = np.where(inside, bstart[np.maximum(b, 0)], 0)
    count = np.where(inside, bstart[np.maximum(b, 0) + 1] - start, 0)
    maxcount = int(count.max()) if M else 0
    for k in range(maxcount):
        act = np.nonzero((cell < 0) & (count > k))[0]
        if act.size == 0:
            break
        c = bcells[start[act] + k]
        dx = pts[act, 0] - cellmap[c, 0]
        dy = pts[act, 1] - cellmap[c, 1]
        a1 = cellmap[c, 2] * dx + cellmap[c, 3] * dy
        a2 = cellmap[c, 4] * dx + cellmap[c, 5] * dy
        a0 = 1.0 - a1 - a2
        hit = (a0 >= -tol) & (a1 >= -tol) & (a2 >= -tol)
        idx = act[hit]
        cell[idx] = c[hit]
        bary[idx, 0] = a0[hit]
        bary[idx, 1] = a1[hit]
        bary[idx, 2] = a2[hit]
    return cell, bary


def convolve(targets, offsets, weights, cx, cy, inv_kappa, ox, oy, bsize, nbx, nby,
             bstart, bcells, cellmap, tol, cells, values, nodal):
    T, J, K = targets.shape[0], offsets.shape[0], values.shape[1]
    out = np.zeros((T, K))
    per = max(1, _CHUNK // max(J, 1))
    centre = np.array([cx, cy])
    for s in range(0, T, per):
        tgt = targets[s:s + per]
        z = centre + ((tgt[:, None, :] - offsets[None, :, :]) - centre) * inv_kappa
        c, bary = locate(z.reshape(-1, 2), ox, oy, bsize, nbx, nby, bstart, bcells,
                         cellmap, tol)
        hit = c >= 0
        samp = np.zeros((c.size, K))
        if nodal:
            nodes = cells[c[hit]]
            samp[hit] = np.einsum("mi,mik->mk", bary[hit], values[nodes])
        else:
            samp[hit] = values[c[hit]]
        samp = samp.reshape(tgt.shape[0], J, K)
        # sequential in j, like the compiled loop
        acc = np.zeros((tgt.shape[0], K))
        for j in range(J):
            acc += weights[j] * samp[:, j, :]
        out[s:s + per] = acc
    return out


def pair_max(pts, f, expo, mode, rows, cutoff):
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    f = np.ascontiguousarray(f, dtype=np.float64)
    N = pts.shape[0]
    best, bi, bj = -1.0, -1, -1
    per = max(1, _CHUNK // max(N, 1))
    for s in range(0, rows.size, per):
        r = rows[s:s + per]
        d2 = ((pts[r, None, :] - pts[None, :, :]) ** 2).sum(-1)
        fi = f[r][:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            if mode == 0:
                ratio = fi / (f[None, :] + d2 ** (0.5 * expo))
                zero_num = np.broadcast_to(fi == 0.0, ratio.shape)
                zz = (d2 == 0.0) & (f[None, :] == 0.0)
                ratio = np.where(zero_num, np.where(zz, 1.0, 0.0), ratio)
            elif mode == 1:
                ratio = np.abs(fi - f[None, :]) / d2 ** (0.5 * expo)
                ratio = np.where(d2 == 0.0, -np.inf, ratio)
            else:
                ratio = np.abs(fi - f[None, :]) * (-0.5 * np.log(d2))
                ratio = np.where((d2 == 0.0) | (d2 >= cutoff * cutoff), -np.inf, ratio)
        flat = int(np.argmax(ratio))
        val = ratio.flat[flat]
        if val > best:
            best = float(val)
            bi = int(r[flat // N])
            bj = int(flat % N)
    return best, bi, bj
