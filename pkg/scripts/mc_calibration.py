#!/usr/bin/env python3
"""Calibration of the Monte Carlo estimator against the exact oracle.

For each network, runs many independently seeded estimates and reports how
often the Wilson 99% interval contains the exactly enumerated failure
probability (the nominal rate is 99%), plus the spread of the point
estimates.
"""

import argparse
import sys

from rlncfail.galois import make_field_of_order
from rlncfail.netmodel import butterfly, plait
from rlncfail.rlncsim import estimate_failure, exact_failure

CASES = {
    "butterfly/t1": (butterfly(), "t1", 2),
    "plait(2,1)/t": (plait(2, 1), "t", 2),
    "plait(1,2)/t": (plait(1, 2), "t", 1),
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--field", type=int, default=2)
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--seeds", type=int, default=50)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    field = make_field_of_order(args.field)
    for name, (net, sink, w) in CASES.items():
        exact = float(exact_failure(net, w, field, sink).fraction)
        contained = 0
        estimates = []
        for seed in range(args.seeds):
            est = estimate_failure(net, w, field, sink, args.trials, seed,
                                   workers=args.workers)
            estimates.append(est.p_hat)
            contained += est.ci_low <= exact <= est.ci_high
        lo, hi = min(estimates), max(estimates)
        print(
            f"{name:<14} exact={exact:.7f}  contained={contained}/{args.seeds}"
            f"  p_hat range=[{lo:.7f}, {hi:.7f}]"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
