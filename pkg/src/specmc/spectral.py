"""Symmetric eigendecomposition and the debiased singular triplet estimator.

The estimator: debias both gram matrices with the observed fraction, take
their leading eigenvectors as the singular vector estimates, and recover the
singular values from the leading eigenvalues after subtracting the mean
trailing eigenvalue (a noise-floor estimate) and rescaling by the observed
fraction.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .data import ObservedMatrix
from .gram import bias_adjust, gram_left, gram_right, observed_fraction

_SYM_TOL = 1e-10


class ClampWarning(UserWarning):
    """A negative radicand was clamped when recovering singular values."""


@dataclass(frozen=True)
class EigenLadder:
    """Full descending eigenvalue ladder with the leading eigenvectors.

    `values` always holds every eigenvalue; `vectors` holds orthonormal
    eigenvectors for the leading `vectors.shape[1]` of them, each with its
    largest-magnitude coordinate positive.
    """

    values: np.ndarray
    vectors: np.ndarray
    full_trace: float

    @property
    def dim(self):
        return int(self.values.size)


@dataclass(frozen=True)
class SpectralEstimate:
    """Estimated singular triplets of a partially observed matrix."""

    U_hat: np.ndarray
    V_hat: np.ndarray
    lambda_hat: np.ndarray
    p_hat: float
    tau_hat: float
    rank: int
    right_ladder: EigenLadder
    left_ladder: EigenLadder
    n_clamped: int = 0

    @property
    def shape(self):
        return (self.U_hat.shape[0], self.V_hat.shape[0])

    def signal_scales(self):
        """Estimated singular values normalized by sqrt(n*d)."""
        n, d = self.shape
        return self.lambda_hat / np.sqrt(n * d)

    def to_dict(self):
        n, d = self.shape
        return {
            "n_rows": n,
            "n_cols": d,
            "rank": self.rank,
            "p_hat": self.p_hat,
            "tau_hat": self.tau_hat,
            "lambda_hat": self.lambda_hat,
            "U_hat": self.U_hat,
            "V_hat": self.V_hat,
            "right_values": self.right_ladder.values,
            "left_values": self.left_ladder.values,
            "n_clamped": self.n_clamped,
        }


def _canonical_signs(vectors):
    # largest-magnitude coordinate positive; argmax takes the lowest index on ties
    idx = np.argmax(np.abs(vectors), axis=0)
    flip = vectors[idx, np.arange(vectors.shape[1])] < 0
    vectors[:, flip] = -vectors[:, flip]
    return vectors


def sym_eig_desc(S, k=None):
    """Eigendecomposition of a symmetric matrix, values descending.

    Returns the full value ladder and the top-k eigenvectors (k=None keeps
    all). Eigenvector signs are canonicalized so identical input yields
    identical output.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("input must be a square matrix")
    scale = max(1.0, float(np.abs(S).max()) if S.size else 0.0)
    if S.size and np.abs(S - S.T).max() > _SYM_TOL * scale:
        raise ValueError("input matrix is not symmetric")
    dim = S.shape[0]
    if k is None:
        k = dim
    if not (1 <= k <= dim):
        raise ValueError(f"k must be in [1, {dim}], got {k}")
    w, Q = np.linalg.eigh(S)
    values = w[::-1].copy()
    vectors = _canonical_signs(Q[:, ::-1][:, :k].copy())
    return EigenLadder(values=values, vectors=vectors, full_trace=float(np.trace(S)))


def trailing_eig_mean(ladder, r, dim=None):
    """Mean of the trailing dim-r eigenvalues via the trace shortcut."""
    if dim is None:
        dim = ladder.dim
    if not (0 <= r < dim):
        raise ValueError(f"need 0 <= r < dim, got r={r}, dim={dim}")
    return (ladder.full_trace - float(ladder.values[:r].sum())) / (dim - r)


def singular_values_from_eigs(top_values, tau_hat, p_hat):
    """Recover singular values from leading debiased-gram eigenvalues.

    Returns (values, n_clamped); negative radicands clamp to zero and raise
    a ClampWarning.
    """
    if p_hat <= 0:
        raise ValueError("degenerate observation: p_hat must be positive")
    top_values = np.asarray(top_values, dtype=np.float64)
    radicand = top_values - tau_hat
    n_clamped = int((radicand < 0).sum())
    if n_clamped:
        warnings.warn(
            f"clamped {n_clamped} negative radicand(s) to zero",
            ClampWarning,
            stacklevel=2,
        )
    return np.sqrt(np.clip(radicand, 0.0, None)) / p_hat, n_clamped


def estimate_singular_triplets(obs: ObservedMatrix, rank: int) -> SpectralEstimate:
    """Estimate the top-`rank` singular triplets from observed entries.

    Steps: observed fraction -> debiased right/left grams -> leading
    eigenvectors of each -> noise floor from the trailing right eigenvalues
    -> singular values.
    """
    n, d = obs.shape
    if not (1 <= rank < min(n, d)):
        raise ValueError(f"rank must be in [1, {min(n, d) - 1}], got {rank}")
    if obs.nnz == 0:
        raise ValueError("cannot estimate from an empty mask")
    p_hat = observed_fraction(obs)
    right = sym_eig_desc(bias_adjust(gram_right(obs), p_hat), rank)
    left = sym_eig_desc(bias_adjust(gram_left(obs), p_hat), rank)
    tau_hat = trailing_eig_mean(right, rank)
    lambda_hat, n_clamped = singular_values_from_eigs(right.values[:rank], tau_hat, p_hat)
    return SpectralEstimate(
        U_hat=left.vectors,
        V_hat=right.vectors,
        lambda_hat=lambda_hat,
        p_hat=p_hat,
        tau_hat=tau_hat,
        rank=rank,
        right_ladder=right,
        left_ladder=left,
        n_clamped=n_clamped,
    )
