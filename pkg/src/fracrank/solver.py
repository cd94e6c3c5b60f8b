"""RTrDC solver for fraction-penalised rank minimisation, plus SVT and SVP.

The RTrDC outer loop is a difference-of-convex iteration: the concave part of
``lam * P_a`` is linearised at the current iterate through
:func:`~fracrank.penalty.dc_subgradient`, and the resulting convex
subproblem is solved by a singular value thresholding fixed point.  The
regularisation weight is either fixed or chosen adaptively at every inner
step so that the iterate keeps rank at most ``r``.
"""
import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .numerics import _thin_svd, as_matrix, singular_values
from .operators import MaskOperator, operator_norm
from .penalty import check_fraction_param, dc_subgradient, penalty_of_singular_values

__all__ = [
    "RtrdcConfig",
    "SolverReport",
    "UnsupportedOperatorError",
    "b_mu",
    "inner_solve",
    "rtrdc_solve",
    "svt_solve",
    "svp_solve",
    "objective",
    "surrogate_l1",
    "surrogate_l2",
    "resolve_mu",
    "relative_change",
    "read_report",
]

_GUARD = 1e-30


class UnsupportedOperatorError(TypeError):
    pass


@dataclass
class RtrdcConfig:
    """Knobs of :func:`rtrdc_solve`.

    ``lam`` is either ``"adaptive"`` (requires ``rank``) or a positive float.
    ``mu="auto"`` resolves to ``0.99 / ||A||_2^2``.
    """

    a: float = 1.2
    mu: Union[float, str] = "auto"
    rank: Optional[int] = None
    lam: Union[float, str] = "adaptive"
    outer_tol: float = 1e-8
    inner_tol: float = 1e-8
    max_outer: int = 50
    max_inner: int = 500
    init: str = "zero"

    def __post_init__(self):
        check_fraction_param(self.a)
        if self.adaptive:
            if self.rank is None or self.rank < 1:
                raise ValueError("adaptive lambda needs a target rank >= 1")
        elif not float(self.lam) > 0:
            raise ValueError("fixed lambda must be positive")
        if self.init not in ("zero", "adjoint"):
            raise ValueError("init must be 'zero' or 'adjoint'")
        if self.mu != "auto" and not float(self.mu) > 0:
            raise ValueError("mu must be positive or 'auto'")
        if self.outer_tol <= 0 or self.inner_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be at least 1")

    @property
    def adaptive(self):
        return isinstance(self.lam, str) and self.lam == "adaptive"


@dataclass
class SolverReport:
    algorithm: str
    solution: np.ndarray
    outer_iterations: int = 0
    total_inner_iterations: int = 0
    objective_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    lambda_history: list = field(default_factory=list)
    converged: bool = False
    wall_time_seconds: float = 0.0
    initial_objective: float = math.nan
    bracket_violations: int = 0

    def history_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "objective", "residual", "lambda"])
        for k, (f, r, lam) in enumerate(zip(self.objective_history,
                                            self.residual_history,
                                            self.lambda_history), start=1):
            w.writerow([k, repr(float(f)), repr(float(r)), repr(float(lam))])
        return buf.getvalue()

    def summary_csv(self, re=math.nan, include_time=True):
        seconds = self.wall_time_seconds if include_time else 0.0
        return ("algorithm,re,iterations,seconds\n"
                f"{self.algorithm},{re:.6e},{self.outer_iterations},{seconds:.3f}\n")

    def to_csv(self, re=math.nan, include_time=True):
        """History block, a blank line, then the one-row summary block."""
        return self.history_csv() + "\n" + self.summary_csv(re, include_time)


def read_report(text):
    """Parse :meth:`SolverReport.to_csv` output into ``(history_rows, summary)``."""
    head, _, tail = text.partition("\n\n")
    rows = [
        {"iteration": int(r["iteration"]), "objective": float(r["objective"]),
         "residual": float(r["residual"]), "lambda": float(r["lambda"])}
        for r in csv.DictReader(io.StringIO(head))
    ]
    summary = next(csv.DictReader(io.StringIO(tail)))
    summary = {"algorithm": summary["algorithm"], "re": float(summary["re"]),
               "iterations": int(summary["iterations"]),
               "seconds": float(summary["seconds"])}
    return rows, summary


def relative_change(new, old):
    return float(np.linalg.norm(new - old) / max(np.linalg.norm(new), _GUARD))


def _check_data(op, b):
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.size != op.d:
        raise ValueError(f"data vector must have length {op.d}, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError("data vector contains NaN or Inf")
    return b


def resolve_mu(op, mu):
    if mu == "auto":
        norm = operator_norm(op).value
        if norm == 0:
            raise ValueError("operator is identically zero")
        return 0.99 / norm**2
    return float(mu)


def objective(op, b, X, lam, a):
    """``||A(X) - b||^2 + lam * P_a(X)``."""
    res = op.apply(X) - b
    return float(res @ res) + lam * penalty_of_singular_values(a, singular_values(X))


def surrogate_l1(op, b, X, lam, N):
    """Convex DC subproblem ``||A(X)-b||^2 + lam*||X||_* - <X, N>``."""
    res = op.apply(X) - b
    return float(res @ res + lam * np.sum(singular_values(X)) - np.sum(X * N))


def surrogate_l2(op, b, X, Z, lam, mu, N):
    """Majoriser ``mu*L1(X) - mu*||A(X)-A(Z)||^2 + ||X-Z||_F^2`` of ``mu*L1``."""
    diff = op.apply(X - Z)
    return (mu * surrogate_l1(op, b, X, lam, N) - mu * float(diff @ diff)
            + float(np.sum((X - Z) ** 2)))


def b_mu(Z, op, b, mu, N):
    """Gradient step plus subgradient shift: ``Z + mu*A*(b - A(Z)) + (mu/2)*N``."""
    Z = as_matrix(Z, "Z")
    N = as_matrix(N, "N")
    if N.shape != Z.shape:
        raise ValueError("Z and N must have the same shape")
    b = _check_data(op, b)
    return Z + mu * op.adjoint(b - op.apply(Z)) + 0.5 * mu * N


def _adaptive_lambda(s, r, mu):
    # 2*sigma_{r+1}/mu; zero when no (r+1)-th singular value exists
    return 2.0 * s[r] / mu if r < s.size else 0.0


def inner_solve(op, b, mu, lam, r, N, X_start, inner_tol=1e-8, max_inner=500,
                monitor=None):
    """Thresholding fixed point ``X <- D_{lam*mu}(B_mu(X))`` for the convex subproblem.

    `lam` is a positive float or ``"adaptive"``; in the adaptive case it is
    reset at every step to ``2 * sigma_{r+1}(B_mu(X)) / mu`` so that the new
    iterate has rank at most `r`. `monitor`, if given, is called as
    ``monitor(sigma_B, lam_s)`` once per step.

    Returns ``(X, lam_used, iterations)``.
    """
    b = _check_data(op, b)
    X = as_matrix(X_start, "X_start").copy()
    adaptive = isinstance(lam, str)
    if adaptive and lam != "adaptive":
        raise ValueError(f"unknown lambda policy {lam!r}")
    lam_s = math.nan if adaptive else float(lam)
    shift = 0.5 * mu * as_matrix(N, "N")
    it = 0
    for it in range(1, max_inner + 1):
        B = X + mu * op.adjoint(b - op.apply(X)) + shift
        U, s, Vt = _thin_svd(B)
        if adaptive:
            lam_s = _adaptive_lambda(s, r, mu)
        if monitor is not None:
            monitor(s, lam_s)
        X_new = (U * np.maximum(s - 0.5 * lam_s * mu, 0.0)) @ Vt
        change = relative_change(X_new, X)
        X = X_new
        if change <= inner_tol:
            break
    return X, lam_s, it


def rtrdc_solve(op, b, config=None, X0=None):
    """Minimise ``||A(X) - b||^2 + lam * P_a(X)`` by the RTrDC iteration.

    Parameters
    ----------
    op : AffineOperator
    b : array_like, shape (d,)
    config : RtrdcConfig, optional
        Defaults to ``RtrdcConfig()``, which needs ``rank`` for adaptive
        lambda, so in practice a config is always passed.
    X0 : ndarray, optional
        Explicit starting point, overriding ``config.init``.

    Returns
    -------
    SolverReport
    """
    config = config or RtrdcConfig()
    b = _check_data(op, b)
    t0 = time.perf_counter()
    mu = resolve_mu(op, config.mu)
    a = config.a
    r = config.rank

    if X0 is not None:
        X = as_matrix(X0, "X0").copy()
        if X.shape != op.shape:
            raise ValueError("X0 has the wrong shape")
    elif config.init == "adjoint":
        X = op.adjoint(b)
    else:
        X = np.zeros(op.shape)

    if config.adaptive:
        lam_arg = "adaptive"
        s0 = singular_values(b_mu(X, op, b, mu, np.zeros(op.shape)))
        lam = _adaptive_lambda(s0, r, mu)
    else:
        lam_arg = lam = float(config.lam)

    report = SolverReport("RTrDC", X)
    report.initial_objective = objective(op, b, X, lam, a)

    def monitor(s, lam_s):
        # adaptive lambda must sit in [2 s_{r+1}/mu, 2 s_r/mu) when s_r > s_{r+1}
        if r is not None and r < s.size and s[r - 1] > s[r]:
            lo, hi = 2.0 * s[r] / mu, 2.0 * s[r - 1] / mu
            if not lo <= lam_s < hi:
                report.bracket_violations += 1

    for k in range(1, config.max_outer + 1):
        N = dc_subgradient(X, lam, a) if lam > 0 else np.zeros(op.shape)
        X_new, lam_used, its = inner_solve(
            op, b, mu, lam_arg, r, N, X, config.inner_tol, config.max_inner,
            monitor if config.adaptive else None)
        report.total_inner_iterations += its
        change = relative_change(X_new, X)
        X = X_new
        lam = lam_used
        res = op.apply(X) - b
        report.objective_history.append(objective(op, b, X, lam, a))
        report.residual_history.append(float(np.linalg.norm(res)))
        report.lambda_history.append(float(lam))
        report.outer_iterations = k
        if change <= config.outer_tol:
            report.converged = True
            break

    report.solution = X
    report.wall_time_seconds = time.perf_counter() - t0
    return report


def svt_solve(op, b, tau="auto", step=None, tol=1e-4, max_iters=500):
    """Singular value thresholding for matrix completion.

    ``X_k = shrink(Y_{k-1}, tau)`` on the singular values, then
    ``Y_k = Y_{k-1} + step * A*(b - A(X_k))`` starting from ``Y_0 = 0``.
    Stops once ``||A(X_k) - b|| / ||b|| <= tol``. ``tau="auto"`` is
    ``5*sqrt(m*n)``; ``step=None`` is ``1.2 / SR``.
    """
    if not isinstance(op, MaskOperator):
        raise UnsupportedOperatorError("SVT baseline supports mask operators only")
    b = _check_data(op, b)
    t0 = time.perf_counter()
    m, n = op.shape
    tau = 5.0 * math.sqrt(m * n) if tau == "auto" else float(tau)
    step = 1.2 / op.sampling_ratio if step is None else float(step)
    bnorm = max(float(np.linalg.norm(b)), _GUARD)

    report = SolverReport("SVT", np.zeros(op.shape))
    Y = np.zeros(op.shape)
    X = Y
    for k in range(1, max_iters + 1):
        U, s, Vt = _thin_svd(Y)
        shrunk = np.maximum(s - tau, 0.0)
        X = (U * shrunk) @ Vt
        res = b - op.apply(X)
        rnorm = float(np.linalg.norm(res))
        report.objective_history.append(
            float(tau * shrunk.sum() + 0.5 * np.sum(shrunk**2)))
        report.residual_history.append(rnorm)
        report.lambda_history.append(2.0 * tau)
        report.outer_iterations = k
        if rnorm / bnorm <= tol:
            report.converged = True
            break
        Y = Y + step * op.adjoint(res)

    report.solution = X
    report.total_inner_iterations = report.outer_iterations
    report.wall_time_seconds = time.perf_counter() - t0
    return report


def svp_solve(op, b, r, step=1.0, tol=1e-8, max_iters=500):
    """Singular value projection: gradient step, then best rank-`r` approximation."""
    if r < 1:
        raise ValueError("rank r must be at least 1")
    b = _check_data(op, b)
    t0 = time.perf_counter()
    report = SolverReport("SVP", np.zeros(op.shape))
    X = np.zeros(op.shape)
    for k in range(1, max_iters + 1):
        G = X - step * op.adjoint(op.apply(X) - b)
        U, s, Vt = _thin_svd(G)
        X_new = (U[:, :r] * s[:r]) @ Vt[:r]
        change = relative_change(X_new, X)
        X = X_new
        res = op.apply(X) - b
        rnorm = float(np.linalg.norm(res))
        report.objective_history.append(rnorm**2)
        report.residual_history.append(rnorm)
        report.lambda_history.append(math.nan)
        report.outer_iterations = k
        if change <= tol:
            report.converged = True
            break

    report.solution = X
    report.total_inner_iterations = report.outer_iterations
    report.wall_time_seconds = time.perf_counter() - t0
    return report
