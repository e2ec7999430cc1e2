#!/usr/bin/env python3
"""Run every named preset and write one CSV per scenario.

    python scripts/run_presets.py --out results/ [--estimator monte_carlo]
"""

import argparse
import sys
from pathlib import Path

from batchcode.experiments import PRESETS, preset, write_records
from batchcode.optimizer import SimOptions
from batchcode.simulator import METHODS


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--estimator", choices=METHODS, default="quadrature")
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("names", nargs="*", help="subset of presets (default: all)")
    args = ap.parse_args(argv)

    sim = SimOptions(args.samples, args.seed, args.workers)
    out = Path(args.out)
    mismatches = 0
    for name in args.names or sorted(PRESETS):
        res = preset(name, args.estimator, sim)
        status = "match" if res.matches else "MISMATCH"
        print(f"{name:13s} {res.verdict:40s} expected {res.expected:28s} {status}")
        mismatches += not res.matches
        if res.records:
            write_records(res.records, out / f"{name}.csv")
    return 1 if mismatches else 0


if __name__ == "__main__":
    sys.exit(main())
