"""Numerical checks of the exact-recovery theory for the fraction penalty.

Everything here works on explicit small matrices: the singular-value block
partition of a difference matrix, the inequalities built on it, a sampled
lower bound on restricted isometry constants, and the closed-form threshold
on the fraction parameter below which recovery is certified.
"""
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from .numerics import as_matrix, frobenius_norm, numerical_rank, rank_cutoff, svd
from .operators import MaskOperator
from .penalty import beta_one, check_fraction_param, penalty_value
from .solver import RtrdcConfig, rtrdc_solve

__all__ = [
    "PreconditionError",
    "RecoveryConditionError",
    "PartitionResult",
    "RicEstimate",
    "partition",
    "check_lemma2",
    "check_theorem1",
    "check_theorem2",
    "ric_estimate",
    "recovery_function",
    "a_star",
    "corollary3_bound",
    "lambda_path_experiment",
    "random_orthogonal_pair",
    "run_checks",
]


class PreconditionError(ValueError):
    """A hypothesis of the checked statement does not hold for the input."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class RecoveryConditionError(ValueError):
    pass


@dataclass
class PartitionResult:
    """``R = R0 + Rc`` with ``Rc = sum(blocks)``.

    ``R0`` holds the ``2T`` leading singular triples of ``R``; each block
    holds the next ``K`` (the last one possibly fewer).
    """

    R0: np.ndarray
    Rc: np.ndarray
    blocks: list
    T: int
    K: int
    sigma: np.ndarray = field(repr=False, default=None)

    def block(self, i):
        """1-based block ``R_i``; zero matrix past the end."""
        if 1 <= i <= len(self.blocks):
            return self.blocks[i - 1]
        return np.zeros_like(self.R0)


def partition(R, T, K):
    R = as_matrix(R, "R")
    p = min(R.shape)
    if T < 1 or 2 * T >= p:
        raise ValueError(f"need 1 <= T and 2T < min(m, n) = {p}, got T={T}")
    if K < 1:
        raise ValueError("block size K must be at least 1")
    f = svd(R)
    U, s, V = f
    top = 2 * T
    R0 = (U[:, :top] * s[:top]) @ V[:, :top].T
    # blocks stop at the numerical rank so that low-rank inputs yield none
    rank = int(np.sum(s > rank_cutoff(s, R.shape)))
    blocks = []
    for start in range(top, rank, K):
        stop = min(start + K, p)
        blocks.append((U[:, start:stop] * s[start:stop]) @ V[:, start:stop].T)
    Rc = sum(blocks) if blocks else np.zeros_like(R)
    return PartitionResult(R0, Rc, blocks, T, K, s)


class InequalityCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def check_lemma2(M, N, a):
    """Additivity ``P_a(M + N) = P_a(M) + P_a(N)`` for orthogonal row/column spaces."""
    M = as_matrix(M, "M")
    N = as_matrix(N, "N")
    if M.shape != N.shape:
        raise ValueError("M and N must have the same shape")
    scale = max(1.0, frobenius_norm(M) * frobenius_norm(N))
    if np.linalg.norm(M @ N.T) > 1e-10 * scale:
        raise PreconditionError("M N^T is nonzero: row spaces are not orthogonal")
    if np.linalg.norm(M.T @ N) > 1e-10 * scale:
        raise PreconditionError("M^T N is nonzero: column spaces are not orthogonal")
    lhs = penalty_value(a, M + N)
    rhs = penalty_value(a, M) + penalty_value(a, N)
    return InequalityCheck(lhs, rhs, abs(lhs - rhs) <= 1e-8 * (1.0 + rhs))


def check_theorem1(R, T, K, a):
    """``||R0 + R1||_F >= P_a(R0) / (a sqrt(2T))``."""
    a = check_fraction_param(a)
    part = partition(R, T, K)
    lhs = frobenius_norm(part.R0 + part.block(1))
    rhs = penalty_value(a, part.R0) / (a * math.sqrt(2 * T))
    return InequalityCheck(lhs, rhs, lhs >= rhs - 1e-10)


class Theorem2Check(NamedTuple):
    chain: tuple
    holds: bool
    first_holds: bool
    second_holds: Optional[bool]


def check_theorem2(R, T, K, a, gamma):
    """Evaluate the block-tail chain for the scaled partition of `R`.

    ``chain = (sum_{i>=2} ||R_i/g||_F, sum_{i>=2} P_a(R_{i-1}/g)/sqrt(K),
    P_a(R0/g)/sqrt(K))``. The first link is asserted whenever `gamma`
    exceeds the scale from :func:`~fracrank.penalty.beta_one`. The second
    is only asserted when ``P_a(Rc/g) <= P_a(R0/g)``; otherwise
    ``second_holds`` is ``None``.
    """
    a = check_fraction_param(a, strict_above_one=True)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    part = partition(R, T, K)
    r_c = numerical_rank(part.Rc)
    if r_c > 0:
        sigma1 = float(part.sigma[2 * T])
        required = beta_one(a, r_c, sigma1)
        if not gamma > required:
            raise PreconditionError(
                f"gamma={gamma:g} must exceed {required:g} "
                f"(rank(Rc)={r_c}, sigma_1(Rc)={sigma1:g})", required)

    g = 1.0 / gamma
    tail = part.blocks[1:]
    first = sum(frobenius_norm(g * B) for B in tail)
    middle = sum(penalty_value(a, g * B) for B in part.blocks[:-1])
    middle /= math.sqrt(K)
    last = penalty_value(a, g * part.R0) / math.sqrt(K)

    first_holds = first <= middle + 1e-10
    second_holds = None
    if penalty_value(a, g * part.Rc) <= penalty_value(a, g * part.R0):
        second_holds = middle <= last + 1e-10
    holds = first_holds and second_holds is not False
    return Theorem2Check((first, middle, last), holds, first_holds, second_holds)


@dataclass(frozen=True)
class RicEstimate:
    """Sampled LOWER bound on the rank-`r` restricted isometry constant.

    ``delta_lower`` is the worst distortion ``| ||A(X)||^2 - 1 |`` seen over
    unit-norm rank-``<= r`` samples. The true constant is at least this large;
    sampling cannot certify an upper bound.
    """

    r: int
    delta_lower: float
    trials: int
    seed: int


def _adversarial_samples(op):
    m, n = op.shape
    if isinstance(op, MaskOperator):
        observed = op.to_boolean()
        cells = [tuple(np.argwhere(observed)[0])]
        missing = np.argwhere(~observed)
        if missing.size:
            cells.append(tuple(missing[0]))
    else:
        cells = [(0, 0)]
    for i, j in cells:
        E = np.zeros((m, n))
        E[i, j] = 1.0
        yield E


def ric_estimate(op, r, trials=1000, seed=0, adversarial=True):
    """Lower bound on ``delta_r(A)`` from random unit-norm matrices of rank <= `r`.

    For each trial ``t`` and each rank ``q <= r`` a Gaussian product
    ``X = A B^T`` of rank ``q`` is drawn from the stream seeded by
    ``(seed, t, q)``. The sample set for rank ``r`` therefore contains the one
    for any smaller rank, so the estimate is monotone in ``r``. When
    `adversarial` is set, single-entry matrices are added (for masks: one
    observed and one unobserved cell).
    """
    m, n = op.shape
    if not 1 <= r <= min(m, n):
        raise ValueError(f"rank r={r} outside [1, {min(m, n)}]")
    if trials < 1:
        raise ValueError("trials must be at least 1")

    def distortion(X):
        X = X / np.linalg.norm(X)
        y = op.apply(X)
        return abs(float(y @ y) - 1.0)

    worst = 0.0
    for t in range(trials):
        for q in range(1, r + 1):
            rng = np.random.default_rng([seed, t, q])
            X = rng.standard_normal((m, q)) @ rng.standard_normal((q, n))
            worst = max(worst, distortion(X))
    if adversarial:
        for E in _adversarial_samples(op):
            worst = max(worst, distortion(E))
    return RicEstimate(r, worst, trials, seed)


def recovery_function(a, T, K, delta_K, delta_2TK):
    """``f(a) = (K / 2T)(1 - delta_{2T+K}) / a^2 - 1 - delta_K``; decreasing in ``a``."""
    return (K / (2.0 * T)) * (1.0 - delta_2TK) / a**2 - 1.0 - delta_K


def a_star(T, K, delta_K, delta_2TK):
    """Root of :func:`recovery_function`: any ``1 < a < a_star`` certifies recovery.

    Raises
    ------
    RecoveryConditionError
        If ``K <= 2T`` or ``(K/2T)(1 - delta_{2T+K}) <= 1 + delta_K``.
    """
    if T < 1 or K <= 2 * T:
        raise RecoveryConditionError(
            f"recovery condition not satisfied: need K > 2T (T={T}, K={K})")
    for name, d in (("delta_K", delta_K), ("delta_2TK", delta_2TK)):
        if not 0.0 <= d < 1.0:
            raise ValueError(f"{name}={d} must lie in [0, 1)")
    margin = (K / (2.0 * T)) * (1.0 - delta_2TK) - (1.0 + delta_K)
    if not margin > 0:
        raise RecoveryConditionError(
            f"recovery condition not satisfied: (K/2T)(1-delta_2TK) - (1+delta_K) = "
            f"{margin:g} <= 0")
    return math.sqrt(K * (1.0 - delta_2TK) / (2.0 * T * (1.0 + delta_K)))


def corollary3_bound(a):
    """RIC level ``(3 - 2a^2) / (3 + 2a^2)``: ``delta_5T`` below it certifies recovery.

    Negative for ``a >= sqrt(3/2)``, where nothing is certified.
    """
    a = check_fraction_param(a, strict_above_one=True)
    return (3.0 - 2.0 * a**2) / (3.0 + 2.0 * a**2)


class LambdaPathPoint(NamedTuple):
    lam: float
    solution: np.ndarray
    penalty: float
    residual: float
    report: object


def lambda_path_experiment(op, b, a, lambdas, base_config=None):
    """Solve the fixed-lambda problem along a decreasing path, warm-starting each run.

    Returns one :class:`LambdaPathPoint` per lambda with ``P_a`` of the
    solution and ``||A(X) - b||_2``.
    """
    lambdas = [float(x) for x in lambdas]
    if not lambdas or any(x <= 0 for x in lambdas):
        raise ValueError("lambdas must be positive")
    if any(x2 >= x1 for x1, x2 in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be strictly decreasing")
    b = np.asarray(b, dtype=float)
    base = base_config or RtrdcConfig(a=a, lam=lambdas[0])
    out = []
    X = None
    for lam in lambdas:
        cfg = replace(base, a=a, lam=lam)
        rep = rtrdc_solve(op, b, cfg, X0=X)
        X = rep.solution
        res = float(np.linalg.norm(op.apply(X) - b))
        out.append(LambdaPathPoint(lam, X, penalty_value(a, X), res, rep))
    return out


def random_orthogonal_pair(m, n, rng, rank_m=2, rank_n=2):
    """Random ``M, N`` with mutually orthogonal row spaces and column spaces."""
    if rank_m + rank_n > min(m, n):
        raise ValueError("ranks too large for the shape")
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    W, _ = np.linalg.qr(rng.standard_normal((n, n)))
    k = rank_m + rank_n
    U1, U2 = Q[:, :rank_m], Q[:, rank_m:k]
    V1, V2 = W[:, :rank_m], W[:, rank_m:k]
    M = U1 @ rng.standard_normal((rank_m, rank_m)) @ V1.T
    N = U2 @ rng.standard_normal((rank_n, rank_n)) @ V2.T
    return M, N


def run_checks(trials=100, seed=0):
    """Random sweeps of every inequality checker.

    Returns ``{name: (cases, violations)}``. The ``theorem2`` entry only
    counts cases where the tail-dominance gate applies.
    """
    rng = np.random.default_rng(seed)
    out = {}

    bad = 0
    for _ in range(trials):
        M, N = random_orthogonal_pair(8, 7, rng)
        bad += not check_lemma2(M, N, rng.uniform(0.1, 5.0)).holds
    out["lemma2"] = (trials, bad)

    bad = 0
    for _ in range(trials):
        R = rng.standard_normal((8, 6)) * rng.uniform(0.01, 10.0)
        bad += not check_theorem1(R, int(rng.integers(1, 3)), int(rng.integers(2, 4)),
                                  rng.uniform(1e-3, 5.0)).holds
    out["theorem1"] = (trials, bad)

    bad = cases = 0
    while cases < trials:
        R = rng.standard_normal((9, 8)) * np.exp(-np.arange(8) * rng.uniform(0, 1))
        T, K, a = 1, int(rng.integers(2, 4)), rng.uniform(1.05, 3.0)
        part = partition(R, T, K)
        if numerical_rank(part.Rc) == 0:
            continue
        gamma = 1.01 * beta_one(a, numerical_rank(part.Rc), part.sigma[2 * T])
        res = check_theorem2(R, T, K, a, gamma)
        if res.second_holds is None:
            continue
        cases += 1
        bad += not res.holds
    out["theorem2"] = (cases, bad)

    bad = 0
    for _ in range(trials):
        a = rng.uniform(1.0 + 1e-6, 3.0)
        r = int(rng.integers(1, 6))
        X = rng.standard_normal((7, r)) @ rng.standard_normal((r, 6))
        sigma1 = float(np.linalg.norm(X, 2))
        bad += penalty_value(a, X / beta_one(a, r, sigma1)) > 1.0 - 1.0 / a + 1e-12
    out["lemma3"] = (trials, bad)
    return out
