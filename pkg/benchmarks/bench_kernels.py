"""Compare the compiled and NumPy gain kernels.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from dpbeam import kernels


def cases(rng):
    for m_h, m_v, n in ((4, 8, 128), (8, 8, 256), (8, 16, 512)):
        e = rng.standard_normal((m_h, m_v)) + 1j * rng.standard_normal((m_h, m_v))
        e /= np.linalg.norm(e)
        grid = -np.pi + 2 * np.pi * np.arange(n) / n
        pa, pe = (g.ravel() for g in np.meshgrid(grid, grid, indexing="ij"))
        yield f"{m_h}x{m_v} points n={n}x{n}", kernels.gain_points, (e, pa, pe)
        yield f"{m_h}x{m_v} separable n={n}x{n}", kernels.gain_separable, (e, grid, grid)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.compiled_backend is None:
        print("compiled extension not available; only the NumPy backend can run")
    print(f"{'case':32} {'numpy [ms]':>11} {'cython [ms]':>12} {'speedup':>8} {'max diff':>10}")
    for name, fn, a in cases(np.random.default_rng(0)):
        t_py = min(timeit.repeat(lambda: fn(*a, impl=kernels.python_backend), number=1, repeat=args.repeat))
        if kernels.compiled_backend is None:
            print(f"{name:32} {1e3 * t_py:11.2f}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(*a, impl=kernels.compiled_backend), number=1, repeat=args.repeat))
        diff = np.abs(fn(*a, impl=kernels.python_backend) - fn(*a, impl=kernels.compiled_backend)).max()
        print(f"{name:32} {1e3 * t_py:11.2f} {1e3 * t_cy:12.2f} {t_py / t_cy:8.1f} {diff:10.1e}")


if __name__ == "__main__":
    main()
