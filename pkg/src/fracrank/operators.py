"""Linear measurement maps ``A: R^{m x n} -> R^d`` and their adjoints.

Two concrete operators are provided: :class:`GeneralOperator`, defined by a
stack of ``d`` measurement matrices, and :class:`MaskOperator`, which samples
entries on an index set (matrix completion).
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .numerics import as_matrix

__all__ = [
    "AffineOperator",
    "GeneralOperator",
    "MaskOperator",
    "OperatorNorm",
    "apply",
    "adjoint_apply",
    "operator_norm",
    "sample_mask",
    "full_mask",
    "save_mask",
    "load_mask",
    "format_mask",
    "parse_mask",
]


class AffineOperator:
    """Common interface. Subclasses define ``m``, ``n``, ``d``."""

    m: int
    n: int

    @property
    def shape(self):
        return self.m, self.n

    def _check_matrix(self, X):
        X = as_matrix(X)
        if X.shape != (self.m, self.n):
            raise ValueError(
                f"matrix has shape {X.shape}, operator expects {(self.m, self.n)}"
            )
        return X

    def _check_vector(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim != 1 or y.size != self.d:
            raise ValueError(f"vector must have length {self.d}, got shape {y.shape}")
        return y

    def __call__(self, X):
        return self.apply(X)


@dataclass(frozen=True, eq=False)
class GeneralOperator(AffineOperator):
    """``A(X)_k = <A_k, X> = tr(A_k^T X)`` for a stack ``matrices`` of shape (d, m, n)."""

    matrices: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.matrices, dtype=float)
        if A.ndim != 3 or A.shape[0] < 1:
            raise ValueError("matrices must have shape (d, m, n) with d >= 1")
        if not np.all(np.isfinite(A)):
            raise ValueError("measurement matrices must be finite")
        A = A.copy()
        A.setflags(write=False)
        object.__setattr__(self, "matrices", A)

    @classmethod
    def gaussian(cls, d, m, n, seed=None):
        """Entries i.i.d. N(0, 1/d), so that ``E||A(X)||^2 = ||X||_F^2``."""
        rng = np.random.default_rng(seed)
        return cls(rng.standard_normal((d, m, n)) / np.sqrt(d))

    @property
    def d(self):
        return self.matrices.shape[0]

    @property
    def m(self):
        return self.matrices.shape[1]

    @property
    def n(self):
        return self.matrices.shape[2]

    def as_dense(self):
        """The ``d x mn`` matrix whose rows are the row-major vectorised ``A_k``."""
        return self.matrices.reshape(self.d, -1)

    def apply(self, X):
        X = self._check_matrix(X)
        return self.as_dense() @ X.ravel()

    def adjoint(self, y):
        y = self._check_vector(y)
        return (y @ self.as_dense()).reshape(self.m, self.n)


@dataclass(frozen=True, eq=False)
class MaskOperator(AffineOperator):
    """Entry sampling on ``Omega = {(rows[k], cols[k])}``, kept in the given order."""

    m: int
    n: int
    rows: np.ndarray
    cols: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).ravel().copy()
        cols = np.asarray(self.cols, dtype=np.int64).ravel().copy()
        if self.m < 1 or self.n < 1:
            raise ValueError("mask dimensions must be positive")
        if rows.shape != cols.shape:
            raise ValueError("rows and cols must have equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= self.m
                          or cols.min() < 0 or cols.max() >= self.n):
            raise ValueError("mask index out of range")
        flat = rows * self.n + cols
        if np.unique(flat).size != flat.size:
            raise ValueError("mask contains duplicate indices")
        rows.setflags(write=False)
        cols.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @classmethod
    def from_boolean(cls, mask):
        mask = np.asarray(mask, dtype=bool)
        rows, cols = np.nonzero(mask)
        return cls(mask.shape[0], mask.shape[1], rows, cols)

    @property
    def d(self):
        return int(self.rows.size)

    @property
    def sampling_ratio(self):
        return self.d / (self.m * self.n)

    def to_boolean(self):
        out = np.zeros((self.m, self.n), dtype=bool)
        out[self.rows, self.cols] = True
        return out

    def apply(self, X):
        X = self._check_matrix(X)
        return X[self.rows, self.cols]

    def adjoint(self, y):
        y = self._check_vector(y)
        out = np.zeros((self.m, self.n))
        out[self.rows, self.cols] = y
        return out

    def __eq__(self, other):
        if not isinstance(other, MaskOperator):
            return NotImplemented
        return (self.shape == other.shape
                and np.array_equal(self.rows, other.rows)
                and np.array_equal(self.cols, other.cols))

    __hash__ = None


def apply(op, X):
    return op.apply(X)


def adjoint_apply(op, y):
    return op.adjoint(y)


class OperatorNorm(NamedTuple):
    value: float
    converged: bool
    iterations: int


def operator_norm(op, max_iters=1000, tol=1e-10, seed=0):
    """Spectral norm of the operator, i.e. of its ``d x mn`` matrix.

    Uses power iteration on ``X -> A*(A(X))``. Mask operators return exactly 1.
    If the iteration has not settled after `max_iters` steps the best estimate
    is returned with ``converged=False``.
    """
    if isinstance(op, MaskOperator):
        if op.d == 0:
            raise ValueError("empty mask")
        return OperatorNorm(1.0, True, 0)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal(op.shape)
    X /= np.linalg.norm(X)
    est = 0.0
    for it in range(1, max_iters + 1):
        Y = op.adjoint(op.apply(X))
        ynorm = np.linalg.norm(Y)
        if ynorm == 0.0:
            return OperatorNorm(0.0, True, it)
        new = float(np.sqrt(ynorm))
        X = Y / ynorm
        if abs(new - est) <= tol * new:
            return OperatorNorm(new, True, it)
        est = new
    return OperatorNorm(est, False, max_iters)


def sample_mask(m, n, s, seed):
    """Uniformly random `s`-subset of the ``m*n`` cells.

    Partial Fisher-Yates shuffle over the row-major cell indices, driven by
    numpy's PCG64 generator seeded with `seed`. The selected cells are stored
    sorted in row-major order.
    """
    total = m * n
    if m < 1 or n < 1:
        raise ValueError("mask dimensions must be positive")
    if not 1 <= s <= total:
        raise ValueError(f"sample count s={s} outside [1, {total}]")
    rng = np.random.Generator(np.random.PCG64(seed))
    cells = np.arange(total, dtype=np.int64)
    picks = rng.integers(np.arange(s), total)
    for i, j in enumerate(picks.tolist()):
        cells[i], cells[j] = cells[j], cells[i]
    chosen = np.sort(cells[:s])
    return MaskOperator(m, n, chosen // n, chosen % n)


def full_mask(m, n):
    idx = np.arange(m * n)
    return MaskOperator(m, n, idx // n, idx % n)


def format_mask(mask):
    """Text form: ``"m n s"`` then one ``"i j"`` line per sampled cell (0-based)."""
    lines = [f"{mask.m} {mask.n} {mask.d}"]
    lines.extend(f"{i} {j}" for i, j in zip(mask.rows.tolist(), mask.cols.tolist()))
    return "\n".join(lines) + "\n"


def parse_mask(text):
    tokens = text.split()
    if len(tokens) < 3:
        raise ValueError("mask file header must read 'm n s'")
    try:
        m, n, s = (int(t) for t in tokens[:3])
        body = np.array([int(t) for t in tokens[3:]], dtype=np.int64)
    except ValueError as exc:
        raise ValueError(f"non-integer token in mask file: {exc}") from None
    if body.size != 2 * s:
        raise ValueError(f"mask file declares {s} cells but holds {body.size / 2:g}")
    pairs = body.reshape(s, 2)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    if not np.array_equal(order, np.arange(s)):
        raise ValueError("mask cells must be sorted in row-major order")
    return MaskOperator(m, n, pairs[:, 0], pairs[:, 1])


def save_mask(mask, path):
    with open(path, "w") as fh:
        fh.write(format_mask(mask))


def load_mask(path):
    with open(path) as fh:
        return parse_mask(fh.read())
