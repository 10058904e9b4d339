"""Kernel-integrated vs closed-form spin order parameters for s = 1/2 .. 4.

Writes one row per (s, rank): operator norm of each route and their
relative difference. Data only; plot it however you like.
"""

import argparse
import csv
import sys

import numpy as np

from qorient.expansion import build_grid
from qorient.quantum import order_parameter_operator
from qorient.spin import SpinSystem, nematic_operator_closed, polarization_operator_closed, spin_kernel


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-twice-s", type=int, default=8, help="largest 2s")
    ap.add_argument("--output", default="-")
    args = ap.parse_args(argv)

    out = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
    w = csv.writer(out)
    w.writerow(["s", "rank", "kernel_norm", "closed_norm", "relative_difference"])
    for twice in range(1, args.max_twice_s + 1):
        s = SpinSystem(twice / 2).s
        kernel = spin_kernel(s, build_grid("S2", max(2 * twice, twice + 2)))
        for l, closed in ((1, polarization_operator_closed(s)), (2, nematic_operator_closed(s))):
            op = order_parameter_operator(kernel, 3, l)
            diff = np.linalg.norm(op.components - closed.components) / max(closed.norm(), 1.0)
            w.writerow([str(s), l, f"{op.norm():.12e}", f"{closed.norm():.12e}", f"{diff:.3e}"])
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
