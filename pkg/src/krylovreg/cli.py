"""Command-line interface ``krylovreg``.

Exit codes: 0 success, 2 invalid input or configuration, 3 solver failure,
4 output could not be written.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import mmio
from .experiment import ConfigError, SolverFailure, load_config, run_experiment
from .nearness import nearness_report
from .problems import PROBLEMS, build_problem

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


def _err(msg):
    print(f"krylovreg: error: {msg}", file=sys.stderr)


def cmd_run(args):
    try:
        cfg = load_config(args.config, args.out)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_INPUT
    try:
        summary = run_experiment(cfg)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except SolverFailure as exc:
        _err(f"solver failure: {exc}")
        return EXIT_SOLVER
    except OSError as exc:
        _err(f"cannot write outputs: {exc}")
        return EXIT_IO
    for row in summary:
        print(f"{row['regularizer']:>9s} {row['preconditioner']:>5s}  "
              f"avg best relerr {row['avg_best_relerr']}")
    print(f"outputs written to {cfg.out_dir}")
    return EXIT_OK


def cmd_nearness(args):
    if args.matrix:
        try:
            A = mmio.read_array(args.matrix)
        except (OSError, ValueError) as exc:
            _err(f"cannot read {args.matrix}: {exc}")
            return EXIT_INPUT
    else:
        if args.m is None:
            _err("--builtin needs --m")
            return EXIT_INPUT
        try:
            A = build_problem(args.builtin, args.m).A.matrix
        except ValueError as exc:
            _err(str(exc))
            return EXIT_INPUT
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        _err(f"nearness needs a square matrix, got shape {A.shape}")
        return EXIT_INPUT
    if not np.any(A):
        _err("nearness is undefined for the zero matrix")
        return EXIT_INPUT
    report = nearness_report(A).normalized()
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_problem(args):
    try:
        prob = build_problem(args.name, args.m, args.noise, args.seed)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INPUT
    out = Path(args.emit)
    files = {"A": "A.mtx", "b": "b.mtx", "b_exact": "b_exact.mtx", "x_exact": "x_exact.mtx"}
    try:
        out.mkdir(parents=True, exist_ok=True)
        mmio.write_array(out / files["A"], prob.A.matrix)
        mmio.write_array(out / files["b"], prob.b)
        mmio.write_array(out / files["b_exact"], prob.b_exact)
        mmio.write_array(out / files["x_exact"], prob.x_exact)
        manifest = {
            "name": prob.name,
            "m": int(prob.m),
            "noise_level": prob.noise_level,
            "seed": prob.seed,
            "delta": prob.delta,
            "files": files,
        }
        if prob.shape2d is not None:
            manifest["image_shape"] = list(prob.shape2d)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        _err(f"cannot write to {out}: {exc}")
        return EXIT_IO
    print(f"wrote {prob.name} (m={prob.m}) to {out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="krylovreg",
        description="Regularizing Krylov solvers, preconditioners and matrix nearness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a batch experiment from a JSON config")
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("nearness", help="distances of a matrix to structured classes")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--matrix", help="Matrix Market array file")
    g.add_argument("--builtin", choices=PROBLEMS, help="built-in test matrix")
    p.add_argument("--m", type=int, help="size of the built-in matrix")
    p.set_defaults(func=cmd_nearness)

    p = sub.add_parser("problem", help="export a test problem as Matrix Market files")
    p.add_argument("--name", required=True, choices=PROBLEMS)
    p.add_argument("--m", type=int, required=True, help="size (image side for blur2d)")
    p.add_argument("--noise", type=float, default=0.0, help="relative noise level")
    p.add_argument("--seed", type=int, default=1, help="noise seed")
    p.add_argument("--emit", required=True, help="output directory")
    p.set_defaults(func=cmd_problem)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
