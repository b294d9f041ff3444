#!/usr/bin/env python3
"""Run every registered verification experiment with its pinned defaults.

Writes one report JSON and one curves CSV per experiment into the output
directory and prints a pass/fail summary table. Expect the compensating
experiment to report a failing closed-form ratio check: the published
approximation it tabulates does not satisfy its own defining equation at
these sample sizes, and the report records that instead of hiding it.

Usage:
    python scripts/run_all_experiments.py [--outdir reports] [--only NAME]
"""

import argparse
import sys
import time
from pathlib import Path

from flatclust.experiments import experiment_names, run_experiment
from flatclust.io import write_json_document


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="reports")
    parser.add_argument("--only", default=None, help="run just one experiment")
    args = parser.parse_args(argv)

    names = [args.only] if args.only else experiment_names()
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    failures = 0
    for name in names:
        t0 = time.perf_counter()
        report = run_experiment(name)
        elapsed = time.perf_counter() - t0
        write_json_document(outdir / f"{name}_report.json", report.to_document())
        with open(outdir / f"{name}_curves.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("curve,x,y\n")
            for curve in sorted(report.curves):
                for x, y in report.curves[curve]:
                    fh.write(f"{curve},{float(x):.17g},{float(y):.17g}\n")
        status = "pass" if report.passed else "FAIL"
        failures += not report.passed
        slope = f" slope={report.slope:.4f}" if report.slope is not None else ""
        print(f"{name:20s} {status}{slope}  ({elapsed:.1f}s)")
        for check, ok in report.checks.items():
            print(f"    {'ok  ' if ok else 'FAIL'} {check}")
    print(f"\n{len(names) - failures}/{len(names)} experiments passed; reports in {outdir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
