# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: point location, shrinking convolution, pair suprema.

Every function here has a NumPy twin in ``_kernels_py`` with the same
signature and the same visiting order, so the two backends agree up to
rounding of ``pow``/``log``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, log, exp, floor, fabs

cnp.import_array()

ctypedef cnp.int64_t i64


cdef inline i64 _locate_one(double px, double py,
                            double ox, double oy, double inv_bs,
                            i64 nbx, i64 nby,
                            const i64[::1] bstart, const i64[::1] bcells,
                            const double[:, ::1] cellmap, double tol,
                            double* l0, double* l1, double* l2) noexcept nogil:
    cdef double fx = (px - ox) * inv_bs
    cdef double fy = (py - oy) * inv_bs
    cdef i64 ix, iy, b, k, c
    cdef double dx, dy, a1, a2, a0
    if fx < 0.0 or fy < 0.0:
        return -1
    ix = <i64>floor(fx)
    iy = <i64>floor(fy)
    if ix >= nbx or iy >= nby:
        return -1
    b = iy * nbx + ix
    for k in range(bstart[b], bstart[b + 1]):
        c = bcells[k]
        dx = px - cellmap[c, 0]
        dy = py - cellmap[c, 1]
        a1 = cellmap[c, 2] * dx + cellmap[c, 3] * dy
        a2 = cellmap[c, 4] * dx + cellmap[c, 5] * dy
        a0 = 1.0 - a1 - a2
        if a0 >= -tol and a1 >= -tol and a2 >= -tol:
            l0[0] = a0
            l1[0] = a1
            l2[0] = a2
            return c
    return -1


def locate(const double[:, ::1] pts, double ox, double oy, double bsize,
           i64 nbx, i64 nby, const i64[::1] bstart, const i64[::1] bcells,
           const double[:, ::1] cellmap, double tol):
    """Return (cell index or -1, barycentric coordinates) for each point."""
    cdef Py_ssize_t m, M = pts.shape[0]
    cdef cnp.ndarray[i64, ndim=1] cell_arr = np.empty(M, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=2] bary_arr = np.zeros((M, 3), dtype=np.float64)
    cdef i64[::1] cell = cell_arr
    cdef double[:, ::1] bary = bary_arr
    cdef double inv_bs = 1.0 / bsize
    cdef double l0 = 0.0, l1 = 0.0, l2 = 0.0
    cdef i64 c
    with nogil:
        for m in range(M):
            c = _locate_one(pts[m, 0], pts[m, 1], ox, oy, inv_bs, nbx, nby,
                            bstart, bcells, cellmap, tol, &l0, &l1, &l2)
            cell[m] = c
            if c >= 0:
                bary[m, 0] = l0
                bary[m, 1] = l1
                bary[m, 2] = l2
    return cell_arr, bary_arr


def convolve(const double[:, ::1] targets, const double[:, ::1] offsets,
             const double[::1] weights, double cx, double cy, double inv_kappa,
             double ox, double oy, double bsize, i64 nbx, i64 nby,
             const i64[::1] bstart, const i64[::1] bcells,
             const double[:, ::1] cellmap, double tol,
             const i64[:, ::1] cells, const double[:, ::1] values, bint nodal):
    """Shrinking convolution of nodal (P1) or per-cell fields.

    out[t, k] = sum_j w_j * f_k(c + (x_t - y_j - c) * inv_kappa), with f
    extended by zero outside the mesh.
    """
    cdef Py_ssize_t T = targets.shape[0], J = offsets.shape[0], K = values.shape[1]
    cdef cnp.ndarray[double, ndim=2] out_arr = np.zeros((T, K), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double inv_bs = 1.0 / bsize
    cdef Py_ssize_t t, j, k
    cdef double zx, zy, l0 = 0.0, l1 = 0.0, l2 = 0.0, w
    cdef i64 c, n0, n1, n2
    with nogil:
        for t in range(T):
            for j in range(J):
                zx = cx + ((targets[t, 0] - offsets[j, 0]) - cx) * inv_kappa
                zy = cy + ((targets[t, 1] - offsets[j, 1]) - cy) * inv_kappa
                c = _locate_one(zx, zy, ox, oy, inv_bs, nbx, nby, bstart, bcells,
                                cellmap, tol, &l0, &l1, &l2)
                if c < 0:
                    continue
                w = weights[j]
                if nodal:
                    n0 = cells[c, 0]
                    n1 = cells[c, 1]
                    n2 = cells[c, 2]
                    for k in range(K):
                        out[t, k] += w * (l0 * values[n0, k] + l1 * values[n1, k]
                                          + l2 * values[n2, k])
                else:
                    for k in range(K):
                        out[t, k] += w * values[c, k]
    return out_arr


def pair_max(const double[:, ::1] pts, const double[::1] f, double expo,
             int mode, const i64[::1] rows, double cutoff):
    """Supremum of a pair ratio over rows x all columns, first maximiser wins.

    mode 0: f_i / (f_j + d^expo), 0/0 := 1, f_i = 0 gives ratio <= 1
    mode 1: |f_i - f_j| / d^expo for d > 0
    mode 2: |f_i - f_j| * log(1/d) for 0 < d < cutoff
    """
    cdef Py_ssize_t N = pts.shape[0], R = rows.shape[0], r, j
    cdef double best = -1.0, fmax = -1e300, fmin = 1e300
    cdef i64 bi = -1, bj = -1, i
    cdef double xi, yi, fi, dx, dy, d2, ratio, denom, thr2, spread
    cdef double half = expo * 0.5
    cdef double cut2 = cutoff * cutoff
    for j in range(N):
        if f[j] > fmax:
            fmax = f[j]
        if f[j] < fmin:
            fmin = f[j]
    with nogil:
        for r in range(R):
            i = rows[r]
            xi = pts[i, 0]
            yi = pts[i, 1]
            fi = f[i]
            thr2 = 1e300
            if mode == 0:
                if fi == 0.0 and best >= 1.0:
                    continue
                if best > 0.0 and fi > 0.0:
                    thr2 = pow(fi / best, 2.0 / expo) * (1.0 + 1e-12)
            else:
                spread = fmax - fi
                if fi - fmin > spread:
                    spread = fi - fmin
                if best > 0.0:
                    if spread <= 0.0:
                        continue
                    if mode == 1:
                        thr2 = pow(spread / best, 2.0 / expo) * (1.0 + 1e-12)
                    else:
                        thr2 = exp(-2.0 * best / spread) * (1.0 + 1e-12)
            for j in range(N):
                dx = xi - pts[j, 0]
                dy = yi - pts[j, 1]
                d2 = dx * dx + dy * dy
                if mode == 0:
                    if fi == 0.0:
                        if d2 == 0.0 and f[j] == 0.0:
                            ratio = 1.0
                        else:
                            ratio = 0.0
                    else:
                        if d2 > thr2:
                            continue
                        denom = f[j] + pow(d2, half)
                        ratio = fi / denom
                elif mode == 1:
                    if d2 == 0.0 or d2 > thr2:
                        continue
                    ratio = fabs(fi - f[j]) / pow(d2, half)
                else:
                    if d2 == 0.0 or d2 >= cut2 or d2 > thr2:
                        continue
                    ratio = fabs(fi - f[j]) * (-0.5 * log(d2))
                if ratio > best:
                    best = ratio
                    bi = i
                    bj = j
    return best, bi, bj
