"""Hot numeric kernels, compiled with numba when available.

Every kernel has a pure-numpy twin. The active backend is chosen once at
import time from the ``SPECMC_BACKEND`` environment variable ("numba" or
"numpy"); unset, it defaults to numba when importable. The numpy gram
kernel adds the same per-row contributions in the same order as the numba
one, so the two backends agree bit for bit on gram matrices; the remaining
kernels agree to rounding. Each backend is deterministic: results do not
depend on how many worker threads call into it.
"""

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency, but stay usable
    HAS_NUMBA = False

_requested = os.environ.get("SPECMC_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"SPECMC_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )
if _requested == "numba" and not HAS_NUMBA:
    raise RuntimeError("SPECMC_BACKEND=numba but numba is not importable")

BACKEND = _requested or ("numba" if HAS_NUMBA else "numpy")


# ---------------------------------------------------------------------------
# Gram accumulation: for each row of the sparse structure, add the outer
# product of that row's observed support. Rows are visited in order, so every
# output cell receives one addend per row, in row order.
# ---------------------------------------------------------------------------

def _gram_numpy(row_ptr, cols, vals, dim):
    g = np.zeros((dim, dim))
    for k in range(row_ptr.size - 1):
        lo, hi = row_ptr[k], row_ptr[k + 1]
        if hi > lo:
            c = cols[lo:hi]
            v = vals[lo:hi]
            g[np.ix_(c, c)] += np.outer(v, v)
    return g


def _gram_numba_py(row_ptr, cols, vals, dim):
    g = np.zeros((dim, dim))
    for k in range(row_ptr.size - 1):
        lo = row_ptr[k]
        hi = row_ptr[k + 1]
        for a in range(lo, hi):
            ca = cols[a]
            va = vals[a]
            for b in range(a, hi):
                g[ca, cols[b]] += va * vals[b]
    # cols are sorted within each row, so only the upper triangle was filled
    for i in range(dim):
        for j in range(i + 1, dim):
            g[j, i] = g[i, j]
    return g


# ---------------------------------------------------------------------------
# Factor-form prediction at listed cells: sum_i coef_i * U[k,i] * V[h,i].
# ---------------------------------------------------------------------------

def _predict_numpy(U, V, coef, rows, cols):
    return np.einsum("ti,ti->t", U[rows] * coef, V[cols])


def _predict_numba_py(U, V, coef, rows, cols):
    out = np.empty(rows.size)
    r = coef.size
    for t in range(rows.size):
        k = rows[t]
        h = cols[t]
        acc = 0.0
        for i in range(r):
            acc += coef[i] * U[k, i] * V[h, i]
        out[t] = acc
    return out


# ---------------------------------------------------------------------------
# Residuals of every sign candidate on the observed cells.
# P[t, i] = lambda_i * U[k_t, i] * V[h_t, i]; cand is (n_cand, r) of +-1.
# ---------------------------------------------------------------------------

def _sign_residuals_numpy(P, y, cand):
    out = np.empty(cand.shape[0])
    for c in range(cand.shape[0]):
        diff = P @ cand[c] - y
        out[c] = diff @ diff
    return out


def _sign_residuals_numba_py(P, y, cand):
    n_cand = cand.shape[0]
    nnz, r = P.shape
    out = np.empty(n_cand)
    for c in range(n_cand):
        acc = 0.0
        for t in range(nnz):
            pred = 0.0
            for i in range(r):
                pred += cand[c, i] * P[t, i]
            diff = pred - y[t]
            acc += diff * diff
        out[c] = acc
    return out


# ---------------------------------------------------------------------------
# Pairwise sums over all n*d cells of the squared factor-form matrix:
# S[i, j] = sum_{k,h} (sum_l coef_l U[k,l] V[h,l])^2 U[k,i] V[h,i] U[k,j] V[h,j]
# Feeds both the singular value covariance and the energy-statistic variance.
# ---------------------------------------------------------------------------

def _pair_m2_sums_numpy(U, V, coef, block=256):
    n, r = U.shape
    S = np.zeros((r, r))
    Uc = U * coef
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        W = (Uc[lo:hi] @ V.T) ** 2
        for i in range(r):
            ui = U[lo:hi, i]
            for j in range(i, r):
                S[i, j] += (ui * U[lo:hi, j]) @ W @ (V[:, i] * V[:, j])
    for i in range(r):
        for j in range(i + 1, r):
            S[j, i] = S[i, j]
    return S


def _pair_m2_sums_numba_py(U, V, coef):
    n, r = U.shape
    d = V.shape[0]
    S = np.zeros((r, r))
    w = np.empty(d)
    for k in range(n):
        for h in range(d):
            acc = 0.0
            for i in range(r):
                acc += coef[i] * U[k, i] * V[h, i]
            w[h] = acc * acc
        for i in range(r):
            for j in range(i, r):
                s = 0.0
                for h in range(d):
                    s += w[h] * V[h, i] * V[h, j]
                S[i, j] += s * U[k, i] * U[k, j]
    for i in range(r):
        for j in range(i + 1, r):
            S[j, i] = S[i, j]
    return S


if HAS_NUMBA:
    _gram_numba = njit(cache=True, nogil=True)(_gram_numba_py)
    _predict_numba = njit(cache=True, nogil=True)(_predict_numba_py)
    _sign_residuals_numba = njit(cache=True, nogil=True)(_sign_residuals_numba_py)
    _pair_m2_sums_numba = njit(cache=True, nogil=True)(_pair_m2_sums_numba_py)


def gram_accumulate(row_ptr, cols, vals, dim):
    """Dense symmetric gram of the zero-imputed sparse matrix (dim x dim)."""
    if BACKEND == "numba":
        return _gram_numba(row_ptr, cols, vals, dim)
    return _gram_numpy(row_ptr, cols, vals, dim)


def predict_cells(U, V, coef, rows, cols):
    """Factor-form matrix values at the listed (row, col) cells."""
    if BACKEND == "numba":
        return _predict_numba(U, V, coef, rows, cols)
    return _predict_numpy(U, V, coef, rows, cols)


def sign_residuals(P, y, cand):
    """Squared observed-cell residual of each sign candidate."""
    if BACKEND == "numba":
        return _sign_residuals_numba(P, y, cand)
    return _sign_residuals_numpy(P, y, cand)


def pair_m2_sums(U, V, coef):
    """All-cells pairwise second-moment sums of the squared factor matrix."""
    if BACKEND == "numba":
        return _pair_m2_sums_numba(U, V, coef)
    return _pair_m2_sums_numpy(U, V, coef)
