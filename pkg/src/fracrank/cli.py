"""Command line front end: ``fracrank {approx,mask,solve,compare,theory}``.

Exit status: 0 success, 2 argument error, 3 numerical failure, 4 I/O error.
"""
import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import bench, operators, theory
from .numerics import truncate_rank
from .solver import RtrdcConfig, rtrdc_solve, svp_solve, svt_solve

EXIT_OK, EXIT_ARGS, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _float_or_auto(text):
    return text if text == "auto" else float(text)


def _lambda_arg(text):
    return text if text == "adaptive" else float(text)


def _seeds(args):
    noise = args.noise_seed if getattr(args, "noisy", False) else None
    print(f"mask_seed={getattr(args, 'seed', None)} noise_seed={noise}", file=sys.stderr)


def cmd_approx(args):
    X = bench.load_pgm(args.input)
    bench.save_pgm(np.clip(truncate_rank(X, args.rank), 0, 1), args.out, args.maxval)


def cmd_mask(args):
    s = bench.sample_count(args.rows, args.cols, args.sr)
    mask = operators.sample_mask(args.rows, args.cols, s, args.seed)
    operators.save_mask(mask, args.out)
    print(f"mask_seed={args.seed}", file=sys.stderr)


def cmd_solve(args):
    M = bench.load_pgm(args.input)
    mask = operators.load_mask(args.mask)
    if mask.shape != M.shape:
        raise ValueError(f"mask shape {mask.shape} does not match image {M.shape}")
    source = bench.add_gaussian_noise(M, args.variance, args.noise_seed) if args.noisy else M
    b = mask.apply(source)
    print(f"noise_seed={args.noise_seed if args.noisy else None}", file=sys.stderr)
    if args.algo == "rtrdc":
        if args.rank is None and args.lam == "adaptive":
            raise ValueError("--rank is required with adaptive lambda")
        cfg = RtrdcConfig(a=args.a, mu=args.mu, rank=args.rank, lam=args.lam,
                          outer_tol=args.tol, inner_tol=args.tol,
                          max_outer=args.max_outer, max_inner=args.max_inner)
        report = rtrdc_solve(mask, b, cfg)
    elif args.algo == "svt":
        report = svt_solve(mask, b, tau=args.tau, step=args.step, tol=args.tol,
                           max_iters=args.max_iters)
    else:
        if args.rank is None:
            raise ValueError("--rank is required for svp")
        report = svp_solve(mask, b, args.rank, step=args.step or 1.0, tol=args.tol,
                           max_iters=args.max_iters)
    bench.save_pgm(report.solution, args.out)
    re = bench.relative_error(report.solution, M)
    with open(args.report, "w") as fh:
        fh.write(report.to_csv(re))
    print(f"{report.algorithm} RE={re:.3e} iterations={report.outer_iterations}")


def cmd_compare(args):
    _seeds(args)
    M_full = bench.load_pgm(args.input)
    inst = bench.make_instance(M_full, args.rank, args.sr, noisy=args.noisy,
                               mask_seed=args.seed, noise_seed=args.noise_seed,
                               variance=args.variance)
    name = args.name or os.path.splitext(os.path.basename(args.input))[0]
    rows = bench.run_comparison(inst, args.algorithms, image_name=name)
    bench.emit_table(rows, args.out, include_time=args.record_time)
    if args.images_dir:
        os.makedirs(args.images_dir, exist_ok=True)
        for row in rows:
            bench.save_pgm(row.report.solution,
                           os.path.join(args.images_dir, f"{row.algorithm.lower()}.pgm"))
    sys.stdout.write(bench.format_table(rows, include_time=args.record_time))


def _write_csv(header, rows, out):
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if out:
            fh.close()


def cmd_theory_ric(args):
    if args.gaussian:
        op = operators.GeneralOperator.gaussian(args.gaussian, args.rows, args.cols,
                                                seed=args.seed)
    else:
        s = bench.sample_count(args.rows, args.cols, args.sr)
        op = operators.sample_mask(args.rows, args.cols, s, args.seed)
    est = theory.ric_estimate(op, args.rank, args.trials, args.seed)
    _write_csv(["r", "delta_lower", "trials"],
               [[est.r, repr(est.delta_lower), est.trials]], args.out)


def cmd_theory_astar(args):
    value = theory.a_star(args.T, args.K, args.delta_K, args.delta_2TK)
    _write_csv(["T", "K", "delta_K", "delta_2TK", "a_star"],
               [[args.T, args.K, args.delta_K, args.delta_2TK, repr(value)]], args.out)


def cmd_theory_check(args):
    results = theory.run_checks(args.trials, args.seed)
    _write_csv(["check", "cases", "violations"],
               [[k, c, v] for k, (c, v) in results.items()], args.out)
    if any(v for _, v in results.values()):
        return EXIT_NUMERIC


def build_parser():
    p = argparse.ArgumentParser(prog="fracrank", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("approx", help="best rank-r approximation of a PGM image")
    a.add_argument("--in", dest="input", required=True)
    a.add_argument("--rank", type=int, required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--maxval", type=int, default=255)
    a.set_defaults(func=cmd_approx)

    k = sub.add_parser("mask", help="sample a uniform random observation mask")
    k.add_argument("--rows", type=int, required=True)
    k.add_argument("--cols", type=int, required=True)
    k.add_argument("--sr", type=float, required=True)
    k.add_argument("--seed", type=int, default=42)
    k.add_argument("--out", required=True)
    k.set_defaults(func=cmd_mask)

    s = sub.add_parser("solve", help="recover an image from a mask")
    s.add_argument("--algo", choices=["rtrdc", "svt", "svp"], required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--mask", required=True)
    s.add_argument("--noisy", action="store_true")
    s.add_argument("--noise-seed", type=int, default=43)
    s.add_argument("--variance", type=float, default=0.01)
    s.add_argument("--a", type=float, default=1.2)
    s.add_argument("--rank", type=int)
    s.add_argument("--mu", type=_float_or_auto, default="auto")
    s.add_argument("--lambda", dest="lam", type=_lambda_arg, default="adaptive")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-outer", type=int, default=50)
    s.add_argument("--max-inner", type=int, default=500)
    s.add_argument("--max-iters", type=int, default=500)
    s.add_argument("--tau", type=_float_or_auto, default="auto")
    s.add_argument("--step", type=float)
    s.add_argument("--out", required=True)
    s.add_argument("--report", required=True)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("compare", help="RTrDC vs SVT vs SVP on one image")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--rank", type=int, required=True)
    c.add_argument("--sr", type=float, required=True)
    c.add_argument("--noisy", action="store_true")
    c.add_argument("--seed", type=int, default=42)
    c.add_argument("--noise-seed", type=int, default=43)
    c.add_argument("--variance", type=float, default=0.01)
    c.add_argument("--algorithms", nargs="+", choices=bench.ALGORITHMS,
                   default=list(bench.ALGORITHMS))
    c.add_argument("--name")
    c.add_argument("--images-dir", help="write each recovered image here")
    c.add_argument("--record-time", action="store_true",
                   help="fill the seconds column (output is then not reproducible)")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compare)

    t = sub.add_parser("theory", help="recovery-theory utilities")
    tsub = t.add_subparsers(dest="theory_command", required=True)
    r = tsub.add_parser("ric", help="sampled lower bound on the RIC")
    r.add_argument("--rows", type=int, required=True)
    r.add_argument("--cols", type=int, required=True)
    r.add_argument("--rank", type=int, required=True)
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--sr", type=float, help="random mask with this sampling ratio")
    src.add_argument("--gaussian", type=int, metavar="D",
                     help="Gaussian operator with D measurements")
    r.add_argument("--trials", type=int, default=1000)
    r.add_argument("--seed", type=int, default=42)
    r.add_argument("--out")
    r.set_defaults(func=cmd_theory_ric)
    s2 = tsub.add_parser("astar", help="fraction-parameter recovery threshold")
    s2.add_argument("--T", type=int, required=True)
    s2.add_argument("--K", type=int, required=True)
    s2.add_argument("--delta-K", type=float, required=True)
    s2.add_argument("--delta-2TK", type=float, required=True)
    s2.add_argument("--out")
    s2.set_defaults(func=cmd_theory_astar)
    ch = tsub.add_parser("check", help="random sweeps of the inequality checkers")
    ch.add_argument("--trials", type=int, default=100)
    ch.add_argument("--seed", type=int, default=0)
    ch.add_argument("--out")
    ch.set_defaults(func=cmd_theory_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args) or EXIT_OK
    except bench.PgmFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())
