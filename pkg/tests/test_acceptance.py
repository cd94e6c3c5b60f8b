"""End-to-end acceptance checks, one test (or group of tests) per criterion.

Run on their own with ``pytest tests/test_acceptance.py -v``; the terminal
summary ends with one PASS/FAIL line per criterion.
"""
import math
import time

import numpy as np
import pytest

from fracrank.bench import (
    decode_pgm, encode_pgm, freedom_ratio, load_pgm, make_instance, relative_error,
    run_comparison, sample_count, save_pgm, synthetic_low_rank,
)
from fracrank.cli import main
from fracrank.numerics import numerical_rank
from fracrank.operators import format_mask, load_mask, parse_mask, sample_mask, save_mask
from fracrank.penalty import beta_one, dc_subgradient, soft_threshold_svt
from fracrank.solver import RtrdcConfig, rtrdc_solve
from fracrank.theory import (
    a_star, check_lemma2, check_theorem1, check_theorem2, corollary3_bound,
    lambda_path_experiment, partition, random_orthogonal_pair, recovery_function,
)

from conftest import low_rank

criterion = pytest.mark.criterion


# independent oracles built straight from numpy's SVD

def sv(X):
    return np.linalg.svd(X, compute_uv=False)


def frac_penalty(a, X):
    s = sv(X)
    return float(np.sum(a * s / (a * s + 1)))


def concave_part(X, lam, a):
    return lam * sv(X).sum() - lam * frac_penalty(a, X)


def re_of(rows):
    return {r.algorithm: r.re for r in rows}


# --- 1-3: synthetic image benchmarks ---------------------------------------------

@pytest.fixture(scope="module")
def ground_truth():
    return synthetic_low_rank(200, 200, 30, seed=42)


@pytest.fixture(scope="module")
def clean_04(ground_truth):
    inst = make_instance(ground_truth, 30, 0.40, mask_seed=42)
    t0 = time.perf_counter()
    rows = run_comparison(inst)
    return inst, rows, time.perf_counter() - t0


@pytest.mark.slow
@criterion(1, "noiseless 200x200 rank 30, SR 0.40: RE <= 1e-3, RTrDC < SVT < SVP")
def test_noiseless_sr04(clean_04):
    inst, rows, seconds = clean_04
    re = re_of(rows)
    print(f"FR={inst.fr:.4f} RE={re} seconds={seconds:.1f}")
    assert inst.fr == pytest.approx(1.44, abs=0.01)
    assert re["RTrDC"] <= 1e-3
    assert re["SVT"] >= 10 * re["RTrDC"]
    assert seconds <= 300
    assert re["SVP"] >= re["SVT"]


@pytest.mark.slow
@criterion(2, "noiseless SR 0.30: RTrDC RE <= 1e-2 and smallest")
def test_noiseless_sr03(ground_truth):
    inst = make_instance(ground_truth, 30, 0.30, mask_seed=42)
    re = re_of(run_comparison(inst))
    print(f"FR={inst.fr:.4f} RE={re}")
    assert re["RTrDC"] < min(re["SVT"], re["SVP"])
    assert re["RTrDC"] <= 1e-2


@pytest.mark.slow
@criterion(3, "noisy (variance 0.01) SR 0.40: RTrDC RE <= 0.25 and smallest")
def test_noisy_sr04(ground_truth):
    inst = make_instance(ground_truth, 30, 0.40, noisy=True, mask_seed=42, noise_seed=43)
    re = re_of(run_comparison(inst))
    print(f"FR={inst.fr:.4f} RE={re}")
    assert re["RTrDC"] <= 0.25
    assert re["RTrDC"] < min(re["SVT"], re["SVP"])


# --- 4: freedom ratio ----------------------------------------------------------------

@criterion(4, "FR arithmetic reproduces 2.8323 and 1.8129")
@pytest.mark.parametrize("m, n, fr", [(419, 400, 2.8323), (256, 256, 1.8129)])
def test_freedom_ratio(m, n, fr):
    assert round(freedom_ratio(sample_count(m, n, 0.40), m, n, 30), 4) == fr
    # make_instance computes the same value from the sampled mask
    inst = make_instance(np.full((m, n), 0.5), 30, 0.40)
    assert round(inst.fr, 4) == fr


# --- 5: proximal operator ------------------------------------------------------------

@criterion(5, "singular value thresholding is the nuclear-norm prox")
def test_prox_oracle():
    rng = np.random.default_rng(5)
    for _ in range(20):
        m, n = rng.integers(2, 8, size=2)
        Y = rng.standard_normal((m, n)) * rng.uniform(0.1, 5)
        lam = rng.uniform(0.01, 4)
        X = soft_threshold_svt(Y, lam)
        f = lambda Z: np.sum((Z - Y) ** 2) + lam * sv(Z).sum()
        best = f(X)
        cands = X + rng.standard_normal((500, m, n)) * rng.uniform(1e-3, 1, (500, 1, 1))
        assert all(best <= f(C) + 1e-12 for C in cands)
        assert f(np.zeros_like(Y)) >= best and f(Y) >= best
        # scalar shrinkage per singular value
        np.testing.assert_allclose(sv(X), np.maximum(sv(Y) - lam / 2, 0), atol=1e-12)


# --- 6: subgradient -----------------------------------------------------------------

@criterion(6, "DC subgradient matches central differences within 1e-5")
def test_subgradient_fd():
    rng = np.random.default_rng(6)
    h = 1e-6
    for _ in range(20):
        m, n = rng.integers(3, 7, size=2)
        p = min(m, n)
        U, _ = np.linalg.qr(rng.standard_normal((m, m)))
        V, _ = np.linalg.qr(rng.standard_normal((n, n)))
        s = np.sort(rng.uniform(0.2, 4.0, p))[::-1]
        s += np.arange(p)[::-1] * 0.05                     # keep them distinct
        X = U[:, :p] @ np.diag(s) @ V[:, :p].T
        lam, a = rng.uniform(0.1, 3), rng.uniform(0.2, 3)
        G = dc_subgradient(X, lam, a)
        for _ in range(5):
            D = rng.standard_normal((m, n))
            fd = (concave_part(X + h * D, lam, a) - concave_part(X - h * D, lam, a)) / (2 * h)
            assert abs(fd - np.sum(G * D)) < 1e-5


# --- 7: monotone DC descent -----------------------------------------------------------

@criterion(7, "fixed-lambda objective history is non-increasing")
def test_dc_descent():
    rng = np.random.default_rng(7)
    for k in range(20):
        m, n, r = int(rng.integers(8, 20)), int(rng.integers(8, 20)), int(rng.integers(1, 4))
        M = low_rank(m, n, r, rng)
        op = sample_mask(m, n, int(0.6 * m * n), seed=k)
        b = op.apply(M)
        lam = float(rng.uniform(0.01, 2))
        rep = rtrdc_solve(op, b, RtrdcConfig(a=float(rng.uniform(0.5, 3)), lam=lam,
                                             max_outer=20, max_inner=300))
        hist = np.array([rep.initial_objective] + rep.objective_history)
        assert np.all(np.diff(hist) <= 1e-9), np.diff(hist).max()


# --- 8: adaptive rank control -----------------------------------------------------------

@criterion(8, "adaptive lambda keeps rank <= r with the threshold bracketed every step")
def test_adaptive_rank_control():
    rng = np.random.default_rng(8)
    for k in range(12):
        m, n = int(rng.integers(10, 30)), int(rng.integers(10, 30))
        r = int(rng.integers(1, 5))
        M = low_rank(m, n, int(rng.integers(1, 7)), rng)  # rank may exceed the target
        op = sample_mask(m, n, int(rng.uniform(0.3, 0.8) * m * n), seed=k)
        rep = rtrdc_solve(op, op.apply(M), RtrdcConfig(rank=r, max_outer=10))
        assert numerical_rank(rep.solution) <= r
        assert rep.bracket_violations == 0


# --- 9: theory suite -------------------------------------------------------------

@criterion(9, "theory suite: zero violations, closed-form constants")
def test_theory_lemma2():
    rng = np.random.default_rng(91)
    for _ in range(100):
        M, N = random_orthogonal_pair(9, 8, rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        a = rng.uniform(0.1, 5)
        assert check_lemma2(M, N, a).holds
        assert frac_penalty(a, M + N) == pytest.approx(frac_penalty(a, M) + frac_penalty(a, N))


@criterion(9, "theory suite: zero violations, closed-form constants")
def test_theory_theorem1():
    rng = np.random.default_rng(92)
    for _ in range(500):
        R = rng.standard_normal((8, 6)) * rng.uniform(0.01, 10)
        T, K, a = int(rng.integers(1, 3)), int(rng.integers(2, 4)), rng.uniform(1e-3, 5)
        res = check_theorem1(R, T, K, a)
        s = sv(R)
        lhs = math.sqrt(np.sum(s[:2 * T + K] ** 2))
        rhs = np.sum(a * s[:2 * T] / (a * s[:2 * T] + 1)) / (a * math.sqrt(2 * T))
        assert res.lhs == pytest.approx(lhs) and res.rhs == pytest.approx(rhs)
        assert res.holds and lhs >= rhs


@criterion(9, "theory suite: zero violations, closed-form constants")
def test_theory_theorem2():
    rng = np.random.default_rng(93)
    gated = 0
    while gated < 200:
        T, K = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        s = np.sort(np.concatenate([rng.uniform(1, 5, 2 * T), rng.uniform(0, 1, 6 - 2 * T)]))[::-1]
        U, _ = np.linalg.qr(rng.standard_normal((8, 6)))
        V, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        R = U @ np.diag(s) @ V.T
        a = rng.uniform(1.05, 3)
        part = partition(R, T, K)
        gamma = beta_one(a, numerical_rank(part.Rc), s[2 * T]) * rng.uniform(1.01, 3)
        res = check_theorem2(R, T, K, a, gamma)
        assert res.first_holds
        if res.second_holds is not None:
            gated += 1
            assert res.holds


@criterion(9, "theory suite: zero violations, closed-form constants")
def test_theory_lemma3():
    rng = np.random.default_rng(94)
    for _ in range(100):
        a, r = rng.uniform(1.01, 3), int(rng.integers(1, 6))
        X = low_rank(7, 6, r, rng)
        beta = beta_one(a, r, sv(X)[0])
        assert frac_penalty(a, X / beta) <= 1 - 1 / a + 1e-12


@criterion(9, "theory suite: zero violations, closed-form constants")
def test_theory_constants():
    assert a_star(1, 3, 0.0, 0.0) == pytest.approx(math.sqrt(1.5), abs=1e-12)
    for T, K, dK, d2 in [(1, 3, 0, 0), (1, 5, 0.1, 0.2), (2, 9, 0.05, 0.1), (3, 20, 0.2, 0.3)]:
        f = lambda x: recovery_function(x, T, K, dK, d2)
        lo, hi = 1.0, 10.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if f(mid) > 0 else (lo, mid)
        assert a_star(T, K, dK, d2) == pytest.approx(0.5 * (lo + hi), abs=1e-12)
    assert corollary3_bound(1.2) == pytest.approx(0.0204082, abs=1e-6)


# --- 10: lambda path --------------------------------------------------------------------

@criterion(10, "decreasing-lambda path: residuals fall, RE <= 1e-3, penalty bounded")
def test_lambda_path():
    rng = np.random.default_rng(10)
    M = low_rank(50, 50, 5, rng)
    op = sample_mask(50, 50, 1250, 10)
    path = lambda_path_experiment(op, op.apply(M), 1.2, [1, 1e-1, 1e-2, 1e-3])
    res = [p.residual for p in path]
    assert np.all(np.diff(res) <= 1e-9), res
    assert relative_error(path[-1].solution, M) <= 1e-3
    for p in path:
        assert frac_penalty(1.2, p.solution) <= frac_penalty(1.2, M) + 1e-6


# --- 11: determinism ------------------------------------------------------------------

@criterion(11, "two identical compare runs give byte-identical CSV and PGM output")
def test_determinism(tmp_path):
    src = tmp_path / "low.pgm"
    save_pgm(synthetic_low_rank(40, 36, 3, seed=11), src)
    outputs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        assert main(["compare", "--in", str(src), "--rank", "3", "--sr", "0.5", "--noisy",
                     "--seed", "42", "--out", str(d / "table.csv"), "--images-dir", str(d)]) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert set(outputs[0]) == {"table.csv", "rtrdc.pgm", "svt.pgm", "svp.pgm"}
    assert outputs[0] == outputs[1]


# --- 12: file round trips ---------------------------------------------------------------

@criterion(12, "PGM and mask files round-trip exactly")
def test_pgm_round_trip(tmp_path):
    data = b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64])
    X = decode_pgm(data)
    np.testing.assert_allclose(X, [[0, 1], [128 / 255, 64 / 255]])
    assert encode_pgm(X) == data
    assert decode_pgm(b"P2\n# c\n2 2\n# c\n255\n0 255 128 64\n").tolist() == X.tolist()
    assert encode_pgm(np.array([[0.5, 1.7]])).endswith(bytes([128, 255]))
    rng = np.random.default_rng(12)
    for maxval in (255, 65535):
        Y = rng.uniform(size=(13, 9))
        save_pgm(Y, tmp_path / "y.pgm", maxval)
        Z = load_pgm(tmp_path / "y.pgm")
        assert np.abs(Z - Y).max() <= 1 / (2 * maxval)
        save_pgm(Z, tmp_path / "z.pgm", maxval)
        assert (tmp_path / "z.pgm").read_bytes() == (tmp_path / "y.pgm").read_bytes()


@criterion(12, "PGM and mask files round-trip exactly")
def test_mask_round_trip(tmp_path):
    mask = sample_mask(17, 11, 80, seed=12)
    save_mask(mask, tmp_path / "m.txt")
    back = load_mask(tmp_path / "m.txt")
    assert back == mask
    assert format_mask(back) == (tmp_path / "m.txt").read_text()
    assert parse_mask(format_mask(mask)) == mask
