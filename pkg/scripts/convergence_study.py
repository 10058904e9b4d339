"""Refinement studies behind the Fermi and stencil acceptance checks.

stencil: plane-wave error of the finite-difference nematic operator vs N.
fermi:   Cartesian midpoint oracle vs the polar-grid result, vs box size n,
         plus the polar result itself vs its radial resolution.
"""

import argparse
import csv
import math
import sys

import numpy as np

from qorient.fermi import MomentumOccupation, Profile, apply_nematic_stencil, fermi_order_parameters, nematic_symbol
from qorient.oracles import fermi_cartesian_oracle


def stencil_rows(modes=(2, 1), p_F=1.0):
    for N in (8, 16, 32, 64, 128, 256):
        h = 2 * math.pi / N
        x = h * np.arange(N)
        X, Y = np.meshgrid(x, x, indexing="ij")
        psi = np.exp(1j * (modes[0] * X + modes[1] * Y))
        qxx, qxy = apply_nematic_stencil(psi, h, p_F)
        sxx, sxy = nematic_symbol(*modes, p_F)
        err = max(np.max(np.abs(qxx / psi - sxx)), np.max(np.abs(qxy / psi - sxy)))
        yield ["stencil", N, h, err]


def fermi_rows(profile):
    ref = fermi_order_parameters(MomentumOccupation.from_profile(profile, 512, 256), 2)[2].data
    for n in (25, 50, 100, 200, 400):
        Q = fermi_cartesian_oracle(profile, profile.p_max(), n)
        yield ["fermi_oracle", n, 2 * profile.p_max() / n, float(np.max(np.abs(Q - ref)))]
    for n_radial in (16, 32, 64, 128, 256):
        Q = fermi_order_parameters(MomentumOccupation.from_profile(profile, n_radial, 256), 2)[2].data
        yield ["fermi_polar", n_radial, profile.p_max() / n_radial, float(np.max(np.abs(Q - ref)))]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--profile", default="1.2,1.0,0.3,0.05", help="a,b,chi,smearing")
    ap.add_argument("--output", default="-")
    args = ap.parse_args(argv)
    a, b, chi, tau = (float(v) for v in args.profile.split(","))

    out = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
    w = csv.writer(out)
    w.writerow(["study", "resolution", "spacing", "max_abs_error"])
    for row in stencil_rows():
        w.writerow(row)
    for row in fermi_rows(Profile(a, b, chi, tau)):
        w.writerow(row)
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
