"""Dense matrix helpers: full SVD, rank truncation and norms.

Matrices are plain two-dimensional ``float64`` numpy arrays throughout the
package. Functions never modify their inputs.
"""
from typing import NamedTuple

import numpy as np

__all__ = [
    "SvdFactors",
    "as_matrix",
    "svd",
    "singular_values",
    "truncate_rank",
    "frobenius_norm",
    "nuclear_norm",
    "numerical_rank",
    "rank_cutoff",
]


class SvdFactors(NamedTuple):
    """Full singular value decomposition ``X = U @ diag(sigma) @ V.T``.

    ``U`` is ``m x m``, ``V`` is ``n x n`` and ``sigma`` has length
    ``min(m, n)``, sorted in non-increasing order.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def reconstruct(self):
        k = self.sigma.size
        return (self.U[:, :k] * self.sigma) @ self.V[:, :k].T

    @property
    def shape(self):
        return self.U.shape[0], self.V.shape[0]


def as_matrix(X, name="X"):
    """Return `X` as a finite 2-D float array, raising ``ValueError`` otherwise."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return X


def svd(X):
    """Full SVD of `X`.

    Parameters
    ----------
    X : array_like, shape (m, n)

    Returns
    -------
    SvdFactors
        Square orthogonal ``U`` (m x m) and ``V`` (n x n) with singular values
        in non-increasing order.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the underlying LAPACK routine does not converge.
    """
    X = as_matrix(X)
    U, s, Vt = np.linalg.svd(X, full_matrices=True)
    return SvdFactors(U, s, Vt.T)


def _thin_svd(X):
    # internal fast path: same singular values, thin factors
    return np.linalg.svd(X, full_matrices=False)


def singular_values(X):
    return np.linalg.svd(as_matrix(X), compute_uv=False)


def truncate_rank(X, r):
    """Best rank-`r` approximation of `X` in Frobenius norm (Eckart-Young)."""
    X = as_matrix(X)
    if not 1 <= r <= min(X.shape):
        raise ValueError(f"rank r={r} outside [1, {min(X.shape)}]")
    U, s, Vt = _thin_svd(X)
    return (U[:, :r] * s[:r]) @ Vt[:r]


def frobenius_norm(X):
    return float(np.linalg.norm(as_matrix(X), "fro"))


def nuclear_norm(X):
    return float(np.sum(singular_values(X)))


def rank_cutoff(sigma, shape):
    """Singular values at or below this are treated as zero in diagnostics."""
    if sigma.size == 0:
        return 0.0
    return float(sigma[0]) * max(shape) * 1e-12


def numerical_rank(X):
    X = as_matrix(X)
    s = singular_values(X)
    return int(np.sum(s > rank_cutoff(s, X.shape)))
