"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--h 0.03125] [--repeat 3]

Each row runs one public entry point under both backends, reports the best
wall time and checks that the two results agree.
"""
import argparse
import time

import numpy as np

from lavgap import kernels
from lavgap.domain_grid import build_disk_mesh
from lavgap.mollify import ShrinkMollifier, apply, test_function
from lavgap.weights import power_weight, zk_constant_estimate


def _best(fn, repeat):
    out, best = None, np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return out, best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", type=float, default=1 / 32)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    mesh = build_disk_mesh(1.0, args.h)
    pts = np.random.default_rng(0).uniform(-0.7, 0.7, (200_000, 2))
    v = test_function("random", mesh, seed=0)
    m = ShrinkMollifier(0.1)
    cases = {
        "locate (200k points)": lambda: mesh.locate(pts)[0],
        "convolve (mollify at nodes)": lambda: apply(m, v).values,
        "pair_max (Z^kappa, |x|^2)": lambda: zk_constant_estimate(power_weight(2.0), 2.0, mesh).constant,
    }
    try:
        kernels.use_backend("cython")
        backends = ("cython", "numpy")
    except ImportError:
        print("compiled extension not built; timing the NumPy fallback only")
        backends = ("numpy",)

    print(f"mesh h={args.h:g}: {mesh.n_nodes} nodes, {mesh.n_cells} cells")
    print(f"{'kernel':32s}" + "".join(f"{b:>12s}" for b in backends) + "   speedup  agree")
    prev = kernels.BACKEND
    try:
        for name, fn in cases.items():
            res, times = {}, {}
            for b in backends:
                kernels.use_backend(b)
                res[b], times[b] = _best(fn, args.repeat)
            agree = all(np.allclose(res[b], res[backends[0]], rtol=1e-12, atol=0) for b in backends)
            speed = times["numpy"] / times["cython"] if len(backends) == 2 else float("nan")
            print(f"{name:32s}" + "".join(f"{times[b]:11.3f}s" for b in backends)
                  + f"   {speed:7.1f}x  {agree}")
    finally:
        kernels.use_backend(prev)


if __name__ == "__main__":
    main()
