"""Time the numba and numpy kernel backends on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--rows 400] [--qmax 13]

Prints one line per case with the best time of each backend and the
speedup.  Every case also asserts that the two backends agree exactly.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from thetablock import jacobi, kernels
from thetablock.jacobi import block_expand, block_from_a, psi_from_phi


def best_of(fn, repeat: int) -> tuple:
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def sparse_grid(rng: np.random.Generator, rows: int, cols: int, density: float) -> np.ndarray:
    grid = rng.integers(-20, 21, size=(rows, cols), dtype=np.int64)
    grid[rng.random((rows, cols)) > density] = 0
    return grid


def cases(args):
    rng = np.random.default_rng(0)
    a = sparse_grid(rng, args.rows, 61, 0.3)
    b = sparse_grid(rng, args.rows, 61, 0.3)
    yield "conv2d", lambda: kernels.conv2d(a, b, args.rows)

    den = sparse_grid(rng, args.rows, 21, 0.3)
    den[0, :] = 0
    den[0, 10] = 1
    num = kernels.conv2d(a, den, args.rows)
    yield "divide2d", lambda: kernels.divide2d(num, den, args.rows)[0]

    d = block_from_a((1, -6, 3, 1))

    def psi53():
        # the eta/theta factor caches would otherwise hide the work after the first run
        for cached in (jacobi._eta_scaled, jacobi._eta_cubed_scaled, jacobi._theta_scaled):
            cached.cache_clear()
        return psi_from_phi(block_expand(d, 2 * (args.qmax + 1))).series.terms

    yield f"psi N=53 q^{args.qmax}", psi53


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--rows", type=int, default=400)
    ap.add_argument("--qmax", type=int, default=13)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'case':<18}{'numba s':>10}{'numpy s':>10}{'speedup':>9}")
    for name, fn in cases(args):
        kernels.set_backend("numba")
        fn()  # compile outside the timed runs
        t_nb, r_nb = best_of(fn, args.repeat)
        kernels.set_backend("numpy")
        t_np, r_np = best_of(fn, args.repeat)
        same = np.array_equal(r_nb, r_np) if isinstance(r_nb, np.ndarray) else r_nb == r_np
        assert same, f"{name}: backends disagree"
        print(f"{name:<18}{t_nb:>10.4f}{t_np:>10.4f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
