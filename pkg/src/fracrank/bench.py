"""Image-inpainting experiment harness.

Grayscale images are read and written as PGM files with pixel values mapped
to ``[0, 1]``.  An experiment takes a ground-truth image, keeps its best
rank-``r`` approximation, samples a random subset of entries (optionally
after adding Gaussian noise) and compares the recovery of RTrDC, SVT and SVP
by relative Frobenius error.
"""
import csv
import io
import logging
import math
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .numerics import as_matrix, frobenius_norm, truncate_rank
from .operators import MaskOperator, sample_mask
from .solver import RtrdcConfig, rtrdc_solve, svp_solve, svt_solve

logger = logging.getLogger(__name__)

__all__ = [
    "PgmFormatError",
    "InpaintingInstance",
    "ExperimentRow",
    "ALGORITHMS",
    "load_pgm",
    "save_pgm",
    "encode_pgm",
    "decode_pgm",
    "add_gaussian_noise",
    "relative_error",
    "sample_count",
    "freedom_ratio",
    "synthetic_low_rank",
    "make_instance",
    "default_configs",
    "run_comparison",
    "emit_table",
    "format_table",
    "read_table",
]

ALGORITHMS = ("RTrDC", "SVT", "SVP")


class PgmFormatError(ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


_WHITESPACE = b" \t\n\r\v\f"


class _HeaderReader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def skip_space(self):
        data = self.data
        while self.pos < len(data):
            c = data[self.pos:self.pos + 1]
            if c == b"#":
                nl = data.find(b"\n", self.pos)
                self.pos = len(data) if nl < 0 else nl + 1
            elif c in _WHITESPACE:
                self.pos += 1
            else:
                break

    def token(self, what):
        self.skip_space()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos:self.pos + 1] not in _WHITESPACE + b"#":
            self.pos += 1
        if start == self.pos:
            raise PgmFormatError(f"missing {what}", start)
        return self.data[start:self.pos], start

    def integer(self, what):
        tok, start = self.token(what)
        if not tok.isdigit():
            raise PgmFormatError(f"invalid {what} {tok!r}", start)
        return int(tok)


def decode_pgm(data):
    """Decode P5 (binary) or P2 (ASCII) PGM bytes into a ``[0, 1]`` matrix."""
    rd = _HeaderReader(data)
    magic, _ = rd.token("magic number")
    if magic not in (b"P5", b"P2"):
        raise PgmFormatError(f"unsupported magic {magic!r}, expected P5 or P2", 0)
    width = rd.integer("width")
    height = rd.integer("height")
    rd.skip_space()
    maxval_pos = rd.pos
    maxval = rd.integer("maxval")
    if width < 1 or height < 1:
        raise PgmFormatError("image dimensions must be positive", maxval_pos)
    if not 1 <= maxval <= 65535:
        raise PgmFormatError(f"maxval {maxval} outside [1, 65535]", maxval_pos)
    count = width * height

    if magic == b"P5":
        if rd.pos >= len(data) or data[rd.pos:rd.pos + 1] not in _WHITESPACE:
            raise PgmFormatError("expected single whitespace after maxval", rd.pos)
        start = rd.pos + 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        if len(data) - start < need:
            raise PgmFormatError(
                f"truncated payload: need {need} bytes, found {len(data) - start}", start)
        pixels = np.frombuffer(data, dtype=dtype, count=count, offset=start)
    else:
        values = []
        for _ in range(count):
            try:
                values.append(rd.integer("pixel value"))
            except PgmFormatError as exc:
                raise PgmFormatError("truncated payload: too few pixel values",
                                     exc.offset) from None
        pixels = np.array(values, dtype=np.int64)
    if pixels.max(initial=0) > maxval:
        raise PgmFormatError("pixel value exceeds maxval", rd.pos)
    return pixels.reshape(height, width).astype(float) / maxval


def load_pgm(path):
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def encode_pgm(X, maxval=255):
    """Binary P5 bytes; values are clamped to ``[0, 1]`` and rounded half-up."""
    X = as_matrix(X)
    if not 1 <= maxval <= 65535:
        raise ValueError("maxval must lie in [1, 65535]")
    pixels = np.floor(np.clip(X, 0.0, 1.0) * maxval + 0.5).astype(np.int64)
    dtype = ">u2" if maxval > 255 else "u1"
    h, w = X.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    return header + pixels.astype(dtype).tobytes()


def save_pgm(X, path, maxval=255):
    data = encode_pgm(X, maxval)
    with open(path, "wb") as fh:
        fh.write(data)


def add_gaussian_noise(X, variance=0.01, seed=None):
    """Zero-mean Gaussian noise of the given variance, then clamp to ``[0, 1]``."""
    X = as_matrix(X)
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    if variance == 0:
        return X.copy()
    rng = np.random.default_rng(seed)
    return np.clip(X + math.sqrt(variance) * rng.standard_normal(X.shape), 0.0, 1.0)


def relative_error(X, M):
    """``||X - M||_F / ||M||_F``."""
    X = as_matrix(X)
    M = as_matrix(M, "M")
    if X.shape != M.shape:
        raise ValueError("X and M must have the same shape")
    denom = frobenius_norm(M)
    if denom == 0:
        raise ValueError("reference matrix is zero")
    return frobenius_norm(X - M) / denom


def sample_count(m, n, sr):
    """Number of observed cells for sampling ratio `sr`, rounded to nearest (half up)."""
    if not 0 < sr <= 1:
        raise ValueError("sampling ratio must lie in (0, 1]")
    return max(1, int(math.floor(sr * m * n + 0.5)))


def freedom_ratio(s, m, n, r):
    """Observed cells per degree of freedom of an ``m x n`` rank-`r` matrix."""
    return s / (r * (m + n - r))


def synthetic_low_rank(m, n, r, seed=42):
    """Exactly rank-`r` matrix with entries in ``[0, 1]``.

    The first factor column pair gives a constant 0.5 level; the remaining
    ``r - 1`` pairs are standard Gaussian and scaled so that no entry
    leaves ``[0, 1]``.
    """
    if not 1 <= r <= min(m, n):
        raise ValueError(f"rank r={r} outside [1, {min(m, n)}]")
    rng = np.random.default_rng(seed)
    texture = rng.standard_normal((m, r - 1)) @ rng.standard_normal((r - 1, n))
    peak = np.abs(texture).max() if r > 1 else 0.0
    scale = 0.5 / peak if peak > 0 else 0.0
    return np.clip(0.5 + scale * texture, 0.0, 1.0)


@dataclass
class InpaintingInstance:
    ground_truth: np.ndarray
    mask: MaskOperator
    observed: np.ndarray
    noisy: bool
    noise_seed: Optional[int]
    mask_seed: int
    sr: float
    fr: float
    rank: int
    variance: float = 0.0

    @property
    def underdetermined(self):
        """Fewer samples than degrees of freedom: exact recovery is impossible."""
        return self.fr < 1.0


def make_instance(M_full, r, sr, noisy=False, mask_seed=42, noise_seed=43, variance=0.01):
    """Rank-`r` ground truth, random mask and (possibly noisy) observations."""
    M_full = as_matrix(M_full, "M_full")
    m, n = M_full.shape
    M = np.clip(truncate_rank(M_full, r), 0.0, 1.0)
    s = sample_count(m, n, sr)
    mask = sample_mask(m, n, s, mask_seed)
    source = add_gaussian_noise(M, variance, noise_seed) if noisy else M
    inst = InpaintingInstance(
        ground_truth=M, mask=mask, observed=mask.apply(source), noisy=bool(noisy),
        noise_seed=noise_seed if noisy else None, mask_seed=mask_seed,
        sr=s / (m * n), fr=freedom_ratio(s, m, n, r), rank=r,
        variance=variance if noisy else 0.0)
    if inst.underdetermined:
        logger.warning("FR = %.4f < 1: rank-%d recovery is not identifiable", inst.fr, r)
    return inst


def default_configs(rank, tol=1e-8, max_outer=200):
    """Per-algorithm keyword arguments used by :func:`run_comparison`.

    RTrDC gets a larger outer budget than the solver default so that runs
    near ``FR = 1`` stop on `tol` rather than on the iteration cap.
    """
    return {
        "RTrDC": {"config": RtrdcConfig(a=1.2, rank=rank, lam="adaptive",
                                        outer_tol=tol, inner_tol=tol,
                                        max_outer=max_outer)},
        "SVT": {"tau": "auto", "step": None, "tol": tol, "max_iters": 500},
        "SVP": {"r": rank, "step": 1.0, "tol": tol, "max_iters": 500},
    }


@dataclass
class ExperimentRow:
    image: str
    algorithm: str
    sr: float
    fr: float
    rank: int
    noisy: bool
    re: float
    iterations: int
    seconds: float
    seed: int
    report: object = field(default=None, repr=False, compare=False)


_COLUMNS = [f.name for f in fields(ExperimentRow) if f.name != "report"]


def run_comparison(instance, algorithms=ALGORITHMS, configs=None, image_name="synthetic"):
    """Run each requested solver on `instance`; RE is against the clean ground truth."""
    unknown = set(algorithms) - set(ALGORITHMS)
    if unknown:
        raise ValueError(f"unknown algorithms: {sorted(unknown)}")
    params = default_configs(instance.rank)
    for name, override in (configs or {}).items():
        params[name] = {**params[name], **override}
    solvers = {"RTrDC": rtrdc_solve, "SVT": svt_solve, "SVP": svp_solve}
    rows = []
    for name in algorithms:
        report = solvers[name](instance.mask, instance.observed, **params[name])
        re = relative_error(report.solution, instance.ground_truth)
        logger.info("%s: RE=%.3e after %d iterations (%.1fs)",
                    name, re, report.outer_iterations, report.wall_time_seconds)
        rows.append(ExperimentRow(
            image=image_name, algorithm=name, sr=instance.sr, fr=instance.fr,
            rank=instance.rank, noisy=instance.noisy, re=re,
            iterations=report.outer_iterations, seconds=report.wall_time_seconds,
            seed=instance.mask_seed, report=report))
    return rows


def format_table(rows, include_time=True):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_COLUMNS)
    for row in rows:
        w.writerow([
            row.image, row.algorithm, repr(float(row.sr)), repr(float(row.fr)),
            row.rank, "true" if row.noisy else "false", f"{row.re:.2e}",
            row.iterations, f"{row.seconds if include_time else 0.0:.3f}", row.seed,
        ])
    return buf.getvalue()


def emit_table(rows, path, include_time=True):
    """Write rows as CSV; RE is printed with three significant digits."""
    with open(path, "w", newline="") as fh:
        fh.write(format_table(rows, include_time))


def read_table(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _COLUMNS:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        return [
            ExperimentRow(
                image=r["image"], algorithm=r["algorithm"], sr=float(r["sr"]),
                fr=float(r["fr"]), rank=int(r["rank"]), noisy=r["noisy"] == "true",
                re=float(r["re"]), iterations=int(r["iterations"]),
                seconds=float(r["seconds"]), seed=int(r["seed"]))
            for r in reader
        ]
