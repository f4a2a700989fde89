"""Rank selection by thresholding the debiased-gram spectrum."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RankDecision:
    """Count of eigenvalues clearing the threshold p_hat^2 * n * c * log(d)."""

    r_hat: int
    threshold: float
    eigenvalues: np.ndarray
    c_const: float

    def to_dict(self):
        return {
            "r_hat": self.r_hat,
            "threshold": self.threshold,
            "c_const": self.c_const,
            "eigenvalues": self.eigenvalues,
        }


def estimate_rank(ladder, p_hat, n, d, c_const=1.0):
    """Estimated rank: eigenvalues of the debiased right gram >= threshold.

    `ladder` holds the spectrum of the d x d debiased gram built from n
    rows (values below the threshold may be truncated). The threshold is
    p_hat^2 * n * c_const * log(d).
    """
    if p_hat <= 0:
        raise ValueError("p_hat must be positive")
    if d < 2:
        raise ValueError("need d >= 2")
    if ladder.dim > d:
        raise ValueError(f"ladder has {ladder.dim} eigenvalues for d={d}")
    threshold = p_hat**2 * n * c_const * np.log(d)
    r_hat = int((ladder.values >= threshold).sum())
    return RankDecision(r_hat=r_hat, threshold=float(threshold),
                        eigenvalues=ladder.values.copy(), c_const=float(c_const))


def scree(ladder, k):
    """Top-k (1-based index, eigenvalue) pairs for external plotting."""
    if not (0 <= k <= ladder.dim):
        raise ValueError(f"k must be in [0, {ladder.dim}]")
    return [(i + 1, float(ladder.values[i])) for i in range(k)]
