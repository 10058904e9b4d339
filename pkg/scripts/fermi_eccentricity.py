"""Nematic strength of an elliptical Fermi sea against its aspect ratio.

For each a/b the rank-2 tensor is computed in the exact and Fermi-surface
modes; the columns give both eigenvalues and their difference, which
measures how far the 1/p^2 -> 1/p_F^2 replacement drifts with eccentricity.
"""

import argparse
import csv
import sys

import numpy as np

from qorient.fermi import MomentumOccupation, Profile, estimate_pF, fermi_order_parameters


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ratios", default="1.0,1.01,1.02,1.05,1.1,1.2,1.3,1.5,2.0")
    ap.add_argument("--smearing", type=float, default=0.05)
    ap.add_argument("--output", default="-")
    args = ap.parse_args(argv)

    out = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
    w = csv.writer(out)
    w.writerow(["a_over_b", "p_F", "q_exact", "q_fermi_surface", "abs_difference"])
    for ratio in (float(r) for r in args.ratios.split(",")):
        occ = MomentumOccupation.from_profile(Profile(ratio, 1.0, 0.0, args.smearing))
        pF = estimate_pF(occ)
        q = {}
        for mode in ("exact", "fermi_surface"):
            Q = fermi_order_parameters(occ, 2, mode, p_F=pF)[2].data
            q[mode] = float(np.max(np.linalg.eigvalsh(Q)))
        w.writerow([ratio, f"{pF:.10f}", f"{q['exact']:.10e}", f"{q['fermi_surface']:.10e}",
                    f"{abs(q['exact'] - q['fermi_surface']):.3e}"])
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
