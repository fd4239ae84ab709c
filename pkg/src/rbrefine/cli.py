"""Command-line driver: ``rbrefine verify FILES...``."""

from __future__ import annotations

import argparse
import json
import sys

from rbrefine.config import Config, parse_int_mode
from rbrefine.errors import RbRefineError
from rbrefine.pipeline import dump, load_program, verify_program

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rbrefine",
                                 description="Check refinement-typed methods with an SMT solver.")
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="verify annotated methods in the given files")
    v.add_argument("files", nargs="+", metavar="FILE")
    v.add_argument("--int-mode", default="int", metavar="int|bv:W",
                   help="unbounded integers (default) or W-bit bitvectors")
    v.add_argument("--array-bound", type=int, default=10, metavar="N",
                   help="array capacity (default 10)")
    v.add_argument("--solver", metavar="PATH", help="SMT solver executable (default z3)")
    v.add_argument("--timeout", type=float, default=60.0, metavar="S",
                   help="per-query solver timeout in seconds (default 60)")
    v.add_argument("--label", metavar="NAME", help="only methods marked verify: NAME")
    v.add_argument("--dump-ir", action="store_true",
                   help="print the lowered IR instead of verifying")
    v.add_argument("--dump-smt", metavar="DIR",
                   help="write one .smt2 file per query to DIR instead of verifying")
    v.add_argument("--json", action="store_true", help="print the report as JSON")
    v.add_argument("--jobs", type=int, default=1, metavar="N",
                   help="solver processes to run concurrently")
    v.add_argument("--depth-limit", type=int, default=16, metavar="N",
                   help="maximum nesting of inlined exact calls")
    return ap


def config_from_args(args) -> Config:
    mode, width = parse_int_mode(args.int_mode)
    return Config(int_mode=mode, bv_width=width, array_bound=args.array_bound,
                  depth_limit=args.depth_limit, solver_path=args.solver,
                  timeout=args.timeout, parallelism=max(1, args.jobs),
                  dump_ir=args.dump_ir, dump_smt=args.dump_smt, label=args.label)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        config = config_from_args(args)
    except ValueError as exc:
        print(f"rbrefine: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    sources = []
    for path in args.files:
        try:
            with open(path) as fh:
                sources.append((path, fh.read()))
        except OSError as exc:
            print(f"rbrefine: cannot read {path}: {exc.strerror}", file=sys.stderr)
            return EXIT_IO

    try:
        program = load_program(sources)
        if args.dump_ir or args.dump_smt:
            sys.stdout.write(dump(program, config))
            return EXIT_OK
        report = verify_program(program, config)
    except RbRefineError as exc:
        where = f"{exc.source}:" if getattr(exc, "source", None) else ""
        print(f"rbrefine: {where}{exc} ({type(exc).__name__})", file=sys.stderr)
        return EXIT_FAILED
    except OSError as exc:
        print(f"rbrefine: {exc}", file=sys.stderr)
        return EXIT_IO

    if args.json:
        json.dump(report.to_json(), sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        sys.stdout.write(report.text())
    return EXIT_OK if report.all_safe else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
