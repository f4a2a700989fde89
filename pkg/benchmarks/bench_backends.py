"""Timing comparison of the numba and numpy kernel backends.

Runs each hot kernel on representative problem sizes and prints per-backend
timings. Invoke directly:

    python benchmarks/bench_backends.py
"""

import time

import numpy as np

from specmc import backends
from specmc.data import ObservedMatrix


def best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def make_sparse(rng, n, d, frac):
    dense = rng.normal(size=(n, d))
    return ObservedMatrix.from_mask(dense, rng.random((n, d)) < frac)


def main():
    if not backends.HAS_NUMBA:
        raise SystemExit("numba not importable; nothing to compare")
    rng = np.random.default_rng(0)

    obs = make_sparse(rng, 943, 1682, 0.063)   # recommender-scale sparsity
    gram_args = (obs.row_ptr(), obs.cols, obs.vals, obs.n_cols)

    n, d, r = 1000, 63, 3
    U = rng.normal(size=(n, r))
    V = rng.normal(size=(d, r))
    coef = rng.normal(size=r)
    cells = rng.integers(0, n, 200_000), rng.integers(0, d, 200_000)

    P = rng.normal(size=(100_000, r))
    y = rng.normal(size=100_000)
    cand = np.array([c for c in np.ndindex(*(2,) * r)], dtype=np.float64) * 2 - 1

    Ub = rng.normal(size=(943, r))
    Vb = rng.normal(size=(1682, r))

    cases = [
        ("gram (100k nnz, d=1682)",
         lambda: backends._gram_numba(*gram_args),
         lambda: backends._gram_numpy(*gram_args)),
        ("predict (200k cells, r=3)",
         lambda: backends._predict_numba(U, V, coef, *cells),
         lambda: backends._predict_numpy(U, V, coef, *cells)),
        ("sign residuals (8 cand x 100k)",
         lambda: backends._sign_residuals_numba(P, y, cand),
         lambda: backends._sign_residuals_numpy(P, y, cand)),
        ("pair sums (1000x63, r=3)",
         lambda: backends._pair_m2_sums_numba(U, V, coef),
         lambda: backends._pair_m2_sums_numpy(U, V, coef)),
        ("pair sums (943x1682, r=3)",
         lambda: backends._pair_m2_sums_numba(Ub, Vb, coef),
         lambda: backends._pair_m2_sums_numpy(Ub, Vb, coef)),
    ]

    print(f"{'kernel':<34}{'numba':>10}{'numpy':>10}{'speedup':>9}")
    for name, jitted, plain in cases:
        jitted()  # compile before timing
        t_numba = best_of(jitted)
        t_numpy = best_of(plain)
        print(f"{name:<34}{t_numba * 1e3:>8.1f}ms{t_numpy * 1e3:>8.1f}ms"
              f"{t_numpy / t_numba:>8.1f}x")


if __name__ == "__main__":
    main()
