"""Command-line interface.

Exit codes
----------
0  success
1  unexpected internal error
2  usage error or invalid configuration
3  unreadable or malformed input matrix
4  degenerate factor (a component collapsed)
5  numerical overflow
6  every restart failed
7  R² undefined (constant input)
8  output could not be written
9  verification found a mismatch
"""

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .divergence import EPS_FLOOR, dual_divergence_scalar
from .errors import (AllRestartsFailed, ConstantMatrix, DegenerateFactor, DualNMFError,
                     InvalidConfig, NonFiniteResult, ParseError, UnsupportedAlpha,
                     WriteFailure)
from .factorizer import FactorConfig, run_multi
from .io import (RunManifest, format_float, matrix_to_text, read_matrix, timestamp,
                 verify_outputs, write_result, write_text)
from .synth import NOISE_MODELS, generate

logger = logging.getLogger("dualnmf")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_DEGENERATE = 4
EXIT_NONFINITE = 5
EXIT_ALL_FAILED = 6
EXIT_CONSTANT = 7
EXIT_WRITE = 8
EXIT_VERIFY = 9

_EXIT_FOR = [
    (InvalidConfig, EXIT_USAGE),
    (UnsupportedAlpha, EXIT_USAGE),
    (ParseError, EXIT_INPUT),
    (DegenerateFactor, EXIT_DEGENERATE),
    (NonFiniteResult, EXIT_NONFINITE),
    (AllRestartsFailed, EXIT_ALL_FAILED),
    (ConstantMatrix, EXIT_CONSTANT),
    (WriteFailure, EXIT_WRITE),
]


def exit_code_for(exc):
    for cls, code in _EXIT_FOR:
        if isinstance(exc, cls):
            return code
    return EXIT_INTERNAL


class UsageError(Exception):
    pass


def _float_list(text):
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_fit_flags(sub, alpha_required):
    sub.add_argument("--input", required=True, type=Path, help="matrix file (CSV or TSV)")
    sub.add_argument("--rank", required=True, type=int)
    if alpha_required:
        sub.add_argument("--alpha", type=float, default=1.0)
    sub.add_argument("--delta", type=float, default=1e-6, help="convergence threshold in (0, 1)")
    sub.add_argument("--max-iters", type=int, default=1000)
    sub.add_argument("--restarts", type=int, default=1)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--eps-floor", type=float, default=EPS_FLOOR)
    sub.add_argument("--convergence", choices=["abs", "rel"], default="abs")
    sub.add_argument("--out", required=True, type=Path, help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dualnmf",
        description="Non-negative matrix factorization under the dual KL divergence family.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    subs = parser.add_subparsers(dest="command", required=True)

    f = subs.add_parser("factorize", help="factorize one matrix at one alpha")
    _add_fit_flags(f, alpha_required=True)
    f.set_defaults(func=cmd_factorize)

    s = subs.add_parser("sweep", help="factorize at each of several alphas")
    s.add_argument("--alphas", required=True, type=_float_list)
    _add_fit_flags(s, alpha_required=False)
    s.set_defaults(func=cmd_sweep)

    c = subs.add_parser("curve", help="tabulate D(mu || 1) against mu")
    c.add_argument("--alphas", required=True, type=_float_list)
    c.add_argument("--mu-min", type=float, default=0.1)
    c.add_argument("--mu-max", type=float, default=10.0)
    c.add_argument("--points", type=int, default=201)
    c.add_argument("--spacing", choices=["log", "linear"], default="log")
    c.add_argument("--out", required=True, type=Path, help="output CSV file")
    c.set_defaults(func=cmd_curve)

    g = subs.add_parser("synth", help="generate V = WH + noise")
    g.add_argument("--p", required=True, type=int)
    g.add_argument("--n", required=True, type=int)
    g.add_argument("--rank", required=True, type=int)
    g.add_argument("--noise", choices=NOISE_MODELS, default="none")
    g.add_argument("--noise-scale", type=float, default=0.1)
    g.add_argument("--level", type=float, default=20.0, help="mean entry of WH")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--eps-floor", type=float, default=EPS_FLOOR)
    g.add_argument("--out", required=True, type=Path, help="output matrix file")
    g.set_defaults(func=cmd_synth)

    v = subs.add_parser("verify", help="check a factorize output directory")
    v.add_argument("--dir", required=True, type=Path)
    v.add_argument("--input", type=Path, help="input file (default: path in manifest)")
    v.set_defaults(func=cmd_verify)
    return parser


def _config(args, alpha):
    return FactorConfig(rank=args.rank, alpha=alpha, delta=args.delta,
                        max_iters=args.max_iters, restarts=args.restarts, seed=args.seed,
                        eps_floor=args.eps_floor, convergence_mode=args.convergence)


def _fmt_r2(r2):
    return "nan" if math.isnan(r2) else format_float(r2)


def cmd_factorize(args):
    started = timestamp()
    cfg = _config(args, args.alpha)
    V = read_matrix(args.input)
    result = run_multi(V, cfg)
    manifest = RunManifest.for_result(args.input, cfg, result, started, __version__)
    write_result(result, manifest, args.out)
    print(f"winner=restart {result.restart_index} (seed {result.seed_used}) "
          f"iterations={result.iterations_used} converged={str(result.converged).lower()} "
          f"objective={format_float(result.final_objective)} r_squared={_fmt_r2(result.r_squared)}")
    return EXIT_OK


def cmd_sweep(args):
    V = read_matrix(args.input)
    _config(args, 1.0)  # validate the shared flags once, before any fitting
    rows = ["alpha,final_objective,r_squared,iterations,converged\n"]
    for alpha in args.alphas:
        try:
            res = run_multi(V, _config(args, alpha))
        except DualNMFError as exc:
            logger.error("alpha=%s failed: %s", alpha, exc)
            rows.append(f"{format_float(alpha)},nan,nan,0,false\n")
            continue
        rows.append(f"{format_float(alpha)},{format_float(res.final_objective)},"
                    f"{_fmt_r2(res.r_squared)},{res.iterations_used},"
                    f"{str(res.converged).lower()}\n")
        print(f"alpha={format_float(alpha)} objective={format_float(res.final_objective)} "
              f"r_squared={_fmt_r2(res.r_squared)}")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise WriteFailure(f"cannot create {out}: {exc}") from exc
    write_text(out / "sweep.csv", "".join(rows))
    return EXIT_OK


def curve_grid(mu_min, mu_max, points, spacing="log"):
    if not (mu_min > 0 and mu_min < mu_max):
        raise UsageError(f"need 0 < mu-min < mu-max, got {mu_min}, {mu_max}")
    if points < 2:
        raise UsageError("need at least 2 points")
    if spacing == "log":
        return np.geomspace(mu_min, mu_max, points)
    return np.linspace(mu_min, mu_max, points)


def cmd_curve(args):
    grid = curve_grid(args.mu_min, args.mu_max, args.points, args.spacing)
    rows = ["mu,alpha,divergence\n"]
    for alpha in args.alphas:
        for mu in grid:
            d = dual_divergence_scalar(alpha, float(mu), 1.0)
            rows.append(f"{format_float(mu)},{format_float(alpha)},{format_float(d)}\n")
    write_text(args.out, "".join(rows))
    return EXIT_OK


def cmd_synth(args):
    V, W, H = generate(args.p, args.n, args.rank, noise=args.noise,
                       noise_scale=args.noise_scale, seed=args.seed, level=args.level,
                       eps_floor=args.eps_floor)
    write_text(args.out, matrix_to_text(V))
    truth = {
        "p": args.p, "n": args.n, "rank": args.rank, "noise": args.noise,
        "noise_scale": args.noise_scale, "level": args.level, "seed": args.seed,
        "W": W.tolist(), "H": H.tolist(),
    }
    write_text(truth_path(args.out), json.dumps(truth, indent=1) + "\n")
    return EXIT_OK


def truth_path(matrix_path):
    matrix_path = Path(matrix_path)
    return matrix_path.with_name(matrix_path.name + ".truth.json")


def cmd_verify(args):
    problems = verify_outputs(args.dir, args.input)
    for msg in problems:
        print(f"FAIL {msg}")
    if problems:
        return EXIT_VERIFY
    print("OK")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dualnmf {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"dualnmf {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DualNMFError as exc:
        print(f"dualnmf {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)


def run():
    sys.exit(main())
