#!/usr/bin/env python3
"""Scan the large-n slope f(b, R) = m/(R b) and compare finite-difference
signs with the closed-form slope sign, per code rate.

    python scripts/slope_scan.py [--bmax 200] [--rates 0.1 0.2 ...]
"""

import argparse

import numpy as np

from batchcode.analytic import f_derivative_scan, solve_r_prime


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bmax", type=int, default=200)
    ap.add_argument("--rates", type=float, nargs="*",
                    default=[float(r) for r in np.round(np.arange(0.05, 0.96, 0.05), 2)])
    args = ap.parse_args(argv)

    thr = solve_r_prime()
    print(f"threshold: m1 = {thr.m1:.6f}, R' = {thr.r_prime:.6f}")
    print(f"{'R':>5}  {'shape (fd)':12s} {'shape (closed form)':20s} argmin_b  slope disagreements")
    for R in args.rates:
        res = f_derivative_scan(R, range(1, args.bmax + 1))
        disc = res.discrepancies[:6]
        more = "..." if len(res.discrepancies) > 6 else ""
        print(f"{R:5.2f}  {res.classification:12s} {res.approx_classification:20s} {res.argmin_b:8d}  {disc}{more}")


if __name__ == "__main__":
    main()
