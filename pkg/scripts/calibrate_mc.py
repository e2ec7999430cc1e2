#!/usr/bin/env python3
"""Check Monte Carlo error bars: rerun one policy over many seeds and compare
the spread of the means with the reported standard error."""

import argparse

import numpy as np

from batchcode.analytic import quadrature_ejct
from batchcode.service_models import ShiftedExponential
from batchcode.simulator import Policy, SystemSpec, simulate_ejct


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--job-size", type=int, default=60)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--b", type=int, default=3)
    ap.add_argument("--delta", type=float, default=1.0)
    ap.add_argument("--w", type=float, default=1.0)
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--seeds", type=int, default=200)
    args = ap.parse_args(argv)

    spec = SystemSpec(args.n, args.job_size)
    pol = Policy(spec, args.k, args.b)
    model = ShiftedExponential(args.delta, args.w)
    truth = quadrature_ejct(model, spec.n, pol.k, pol.b, pol.g)
    ests = [simulate_ejct(spec, pol, model, args.samples, seed) for seed in range(args.seeds)]
    z = np.array([(e.mean - truth) / e.std_err for e in ests])
    print(f"quadrature {truth:.6f}")
    print(f"z over {args.seeds} seeds: mean {z.mean():+.3f}, sd {z.std(ddof=1):.3f} (want ~0, ~1)")
    print(f"|z| > 4: {int((abs(z) > 4).sum())}")


if __name__ == "__main__":
    main()
