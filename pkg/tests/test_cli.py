import csv
import subprocess
import sys

import numpy as np
import pytest

from fracrank.bench import load_pgm, read_table, save_pgm, synthetic_low_rank
from fracrank.cli import main
from fracrank.numerics import numerical_rank, truncate_rank
from fracrank.operators import load_mask
from fracrank.solver import read_report


@pytest.fixture
def image(tmp_path):
    path = tmp_path / "low.pgm"
    save_pgm(synthetic_low_rank(24, 20, 2, seed=3), path, maxval=65535)
    return path


def test_approx(tmp_path, rng):
    src, out = tmp_path / "in.pgm", tmp_path / "out.pgm"
    save_pgm(rng.uniform(size=(16, 12)), src)
    assert main(["approx", "--in", str(src), "--rank", "3", "--out", str(out),
                 "--maxval", "65535"]) == 0
    expected = np.clip(truncate_rank(load_pgm(src), 3), 0, 1)
    assert np.abs(load_pgm(out) - expected).max() <= 1 / (2 * 65535) + 1e-12


def test_mask(tmp_path, capsys):
    out = tmp_path / "mask.txt"
    assert main(["mask", "--rows", "10", "--cols", "8", "--sr", "0.5", "--seed", "7",
                 "--out", str(out)]) == 0
    mask = load_mask(out)
    assert mask.shape == (10, 8) and mask.rows.size == 40
    assert "mask_seed=7" in capsys.readouterr().err


@pytest.mark.parametrize("algo", ["rtrdc", "svt", "svp"])
def test_solve(tmp_path, image, algo, capsys):
    mask, out, rep = tmp_path / "m.txt", tmp_path / "rec.pgm", tmp_path / "r.csv"
    main(["mask", "--rows", "24", "--cols", "20", "--sr", "0.6", "--out", str(mask)])
    assert main(["solve", "--algo", algo, "--in", str(image), "--mask", str(mask),
                 "--rank", "2", "--out", str(out), "--report", str(rep)]) == 0
    assert load_pgm(out).shape == (24, 20)
    rows, summary = read_report(rep.read_text())
    assert summary["algorithm"] == {"rtrdc": "RTrDC", "svt": "SVT", "svp": "SVP"}[algo]
    assert len(rows) == summary["iterations"]
    if algo != "svt":
        assert summary["re"] < 1e-3
    assert "RE=" in capsys.readouterr().out


def test_solve_noisy_reports_seed(tmp_path, image, capsys):
    mask, out, rep = tmp_path / "m.txt", tmp_path / "rec.pgm", tmp_path / "r.csv"
    main(["mask", "--rows", "24", "--cols", "20", "--sr", "0.6", "--out", str(mask)])
    assert main(["solve", "--algo", "svp", "--in", str(image), "--mask", str(mask),
                 "--rank", "2", "--noisy", "--noise-seed", "5", "--out", str(out),
                 "--report", str(rep)]) == 0
    assert "noise_seed=5" in capsys.readouterr().err


def test_compare_deterministic(tmp_path, image):
    outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for out in outs:
        assert main(["compare", "--in", str(image), "--rank", "2", "--sr", "0.6",
                     "--seed", "42", "--out", str(out),
                     "--images-dir", str(tmp_path / "img")]) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()
    rows = read_table(outs[0])
    assert [r.algorithm for r in rows] == ["RTrDC", "SVT", "SVP"]
    assert rows[0].image == "low" and rows[0].seed == 42
    assert numerical_rank(load_pgm(tmp_path / "img" / "rtrdc.pgm")) >= 1


def test_compare_subset_noisy(tmp_path, image, capsys):
    out = tmp_path / "t.csv"
    assert main(["compare", "--in", str(image), "--rank", "2", "--sr", "0.6", "--noisy",
                 "--algorithms", "SVP", "--out", str(out)]) == 0
    rows = read_table(out)
    assert len(rows) == 1 and rows[0].noisy
    assert "noise_seed=43" in capsys.readouterr().err


def read_stdout_csv(capsys):
    return list(csv.DictReader(capsys.readouterr().out.splitlines()))


def test_theory_astar(capsys):
    assert main(["theory", "astar", "--T", "1", "--K", "3", "--delta-K", "0",
                 "--delta-2TK", "0"]) == 0
    (row,) = read_stdout_csv(capsys)
    assert float(row["a_star"]) == pytest.approx(np.sqrt(1.5))


def test_theory_astar_condition_fails(capsys):
    assert main(["theory", "astar", "--T", "2", "--K", "5", "--delta-K", "0.1",
                 "--delta-2TK", "0.2"]) == 2
    assert "recovery condition not satisfied" in capsys.readouterr().err


def test_theory_ric(capsys, tmp_path):
    assert main(["theory", "ric", "--rows", "30", "--cols", "30", "--rank", "2",
                 "--sr", "0.3", "--trials", "50"]) == 0
    (row,) = read_stdout_csv(capsys)
    assert float(row["delta_lower"]) >= 0.3
    out = tmp_path / "ric.csv"
    assert main(["theory", "ric", "--rows", "6", "--cols", "6", "--rank", "2",
                 "--gaussian", "240", "--trials", "20", "--out", str(out)]) == 0
    assert np.isfinite(float(next(csv.DictReader(out.open()))["delta_lower"]))


def test_theory_check(capsys):
    assert main(["theory", "check", "--trials", "10"]) == 0
    rows = read_stdout_csv(capsys)
    assert {r["check"] for r in rows} == {"lemma2", "theorem1", "theorem2", "lemma3"}
    assert all(r["violations"] == "0" for r in rows)


def test_exit_code_io(tmp_path):
    assert main(["approx", "--in", str(tmp_path / "missing.pgm"), "--rank", "1",
                 "--out", str(tmp_path / "o.pgm")]) == 4
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P7\n")
    assert main(["approx", "--in", str(bad), "--rank", "1",
                 "--out", str(tmp_path / "o.pgm")]) == 4


def test_exit_code_argument(tmp_path, image):
    assert main(["approx", "--in", str(image), "--rank", "99",
                 "--out", str(tmp_path / "o.pgm")]) == 2
    assert main(["mask", "--rows", "4", "--cols", "4", "--sr", "1.5",
                 "--out", str(tmp_path / "m.txt")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--algo", "nope"])
    assert exc.value.code == 2


def test_exit_code_mask_mismatch(tmp_path, image):
    mask = tmp_path / "m.txt"
    main(["mask", "--rows", "5", "--cols", "5", "--sr", "0.5", "--out", str(mask)])
    assert main(["solve", "--algo", "svp", "--rank", "1", "--in", str(image),
                 "--mask", str(mask), "--out", str(tmp_path / "o.pgm"),
                 "--report", str(tmp_path / "r.csv")]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fracrank", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("approx", "mask", "solve", "compare", "theory"):
        assert cmd in res.stdout
