"""Fraction-function rank surrogate and its proximal machinery.

The scalar fraction function ``rho_a(t) = a|t| / (a|t| + 1)`` is applied to
the singular values of a matrix to give a smooth, nonconvex stand-in for
``rank(X)``.  Writing ``lam * P_a(X) = lam * ||X||_* - h(X)`` with
``h(X) = lam * ||X||_* - lam * P_a(X)`` yields the difference-of-convex split
used by the solver.
"""
import numpy as np

from .numerics import _thin_svd, as_matrix, rank_cutoff, singular_values

__all__ = [
    "check_fraction_param",
    "rho",
    "penalty_value",
    "penalty_of_singular_values",
    "soft_threshold_svt",
    "dc_subgradient_weights",
    "dc_subgradient",
    "dc_concave_part",
    "beta_one",
]


def check_fraction_param(a, strict_above_one=False):
    a = float(a)
    if strict_above_one:
        if not a > 1.0:
            raise ValueError(f"fraction parameter a={a} must exceed 1 here")
    elif not a > 0.0:
        raise ValueError(f"fraction parameter a={a} must be positive")
    return a


def rho(a, t):
    """Fraction function ``a|t| / (a|t| + 1)``; works elementwise on arrays."""
    a = check_fraction_param(a)
    at = a * np.abs(t)
    return at / (at + 1.0)


def penalty_of_singular_values(a, sigma):
    return float(np.sum(rho(a, np.asarray(sigma, dtype=float))))


def penalty_value(a, X):
    """``P_a(X) = sum_i rho_a(sigma_i(X))``.

    Lies in ``[0, rank(X)]`` and tends to ``rank(X)`` as ``a`` grows.
    """
    return penalty_of_singular_values(a, singular_values(X))


def soft_threshold_svt(Y, lam):
    """Singular value soft-thresholding.

    Minimiser of ``||X - Y||_F^2 + lam * ||X||_*``: every singular value of
    `Y` is reduced by ``lam / 2`` and clipped at zero.
    """
    Y = as_matrix(Y, "Y")
    if lam < 0:
        raise ValueError("threshold parameter must be nonnegative")
    if lam == 0:
        return Y.copy()
    U, s, Vt = _thin_svd(Y)
    return (U * np.maximum(s - lam / 2.0, 0.0)) @ Vt


def dc_subgradient_weights(sigma, lam, a, zero_below=0.0):
    """Diagonal of the subgradient of ``h`` in the singular basis.

    ``lam - lam * a / (a * sigma + 1)**2``. Singular values at or below
    `zero_below` get weight 0, and so do the negative values that occur for
    ``a > 1`` near ``sigma = 0``.
    """
    a = check_fraction_param(a)
    sigma = np.asarray(sigma, dtype=float)
    w = lam - lam * a / (a * sigma + 1.0) ** 2
    w[sigma <= zero_below] = 0.0
    return np.maximum(w, 0.0)


def dc_subgradient(X, lam, a):
    """An element ``N`` of the subdifferential of ``lam*||X||_* - lam*P_a(X)``.

    Parameters
    ----------
    X : array_like, shape (m, n)
    lam : float
        Regularisation weight, positive.
    a : float
        Fraction parameter.

    Returns
    -------
    N : ndarray, shape (m, n)
        ``U diag(w) V^T`` with ``w`` from :func:`dc_subgradient_weights` and
        ``U, V`` the singular vectors of `X`. Entries of ``w`` lie in
        ``[0, lam)``.
    """
    X = as_matrix(X)
    if not lam > 0:
        raise ValueError("lam must be positive")
    U, s, Vt = _thin_svd(X)
    w = dc_subgradient_weights(s, lam, a, zero_below=rank_cutoff(s, X.shape))
    return (U * w) @ Vt


def dc_concave_part(X, lam, a):
    """``h(X) = lam * ||X||_* - lam * P_a(X)``, the subtracted DC component."""
    s = singular_values(X)
    return float(lam * np.sum(s) - lam * np.sum(rho(a, s)))


def beta_one(a, r, sigma1):
    """Scale above which ``P_a(X / beta) <= 1 - 1/a`` for every rank-`r` `X`
    with largest singular value `sigma1`.

    Returns ``a * (a*r - a + 1) * sigma1 / (a - 1)``; requires ``a > 1``.
    """
    a = check_fraction_param(a, strict_above_one=True)
    if r < 1:
        raise ValueError("rank r must be at least 1")
    if not sigma1 > 0:
        raise ValueError("sigma1 must be positive")
    return a * (a * r - a + 1.0) * sigma1 / (a - 1.0)
