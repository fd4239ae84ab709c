"""Times the verifier on fixture files: median and semi-interquartile range per method.

For regression tracking only.  Usage:

    python scripts/bench.py [--runs 11] [--int-mode int] FILE...
"""

import argparse
import os
import statistics
import sys

from rbrefine.config import Config, parse_int_mode
from rbrefine.pipeline import load_program, verify_program

HERE = os.path.dirname(os.path.abspath(__file__))
DEFAULT_FILES = [os.path.join(HERE, "..", "tests", "fixtures", f) for f in (
    "time.rbl", "money.rbl", "userfile.rbl", "aggregate.rbl", "bank.rbl")]


def siqr(xs):
    q1, _, q3 = statistics.quantiles(xs, n=4, method="inclusive")
    return (q3 - q1) / 2


def bench(paths, runs, config):
    sources = []
    for p in paths:
        with open(p) as fh:
            sources.append((p, fh.read()))
    times: dict = {}
    verdicts: dict = {}
    for _ in range(runs):
        report = verify_program(load_program(sources), config)
        for r in report.results:
            times.setdefault(r.subject, []).append(r.wall_time)
            verdicts[r.subject] = r.verdict
    return [(s, verdicts[s], statistics.median(ts), siqr(ts)) for s, ts in times.items()]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("files", nargs="*", default=DEFAULT_FILES)
    ap.add_argument("--runs", type=int, default=11)
    ap.add_argument("--int-mode", default="int")
    args = ap.parse_args(argv)
    if args.runs < 2:
        ap.error("--runs must be at least 2")
    mode, width = parse_int_mode(args.int_mode)
    rows = bench(args.files, args.runs, Config(int_mode=mode, bv_width=width))
    width = max(len(s) for s, *_ in rows) if rows else 10
    print(f"{'method':<{width}}  {'verdict':<15} {'median s':>9} {'SIQR s':>8}  (runs={args.runs})")
    for subject, verdict, med, sq in rows:
        print(f"{subject:<{width}}  {verdict:<15} {med:9.3f} {sq:8.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
