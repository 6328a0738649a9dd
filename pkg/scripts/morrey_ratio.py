"""Dimensionless Morrey ratio sup|u - u* o tau| / (rhs / M) across the center offset."""

import argparse

import numpy as np

from pslab.extremal import family_cone_frustrum
from pslab.verify import verify_theorem_morrey

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=float, default=0.5)
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--rho-inner", type=float, default=0.3)
    ap.add_argument("--points", type=int, default=6)
    args = ap.parse_args()
    es = np.linspace(0.0, args.rho - args.rho_inner, args.points)
    print(f"{'|e|':>6} {'p':>3} {'lhs':>10} {'rhs/M':>10} {'ratio':>10}")
    for p in (3.0, 4.0):
        for e in es:
            spec = family_cone_frustrum(2, args.a, args.rho, args.rho_inner, float(e))
            rep = verify_theorem_morrey(spec, p, M=1.0)
            print(f"{e:6.3f} {p:3.0f} {rep.lhs:10.4e} {rep.rhs:10.4e} {rep.extra['dimensionless_ratio']:10.4e}")
