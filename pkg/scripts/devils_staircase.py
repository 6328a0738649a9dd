"""L1 distance from the jump-plus-AC approximations u_m to a devil's staircase extremal."""

import argparse

from pslab.extremal import family_devils_staircase
from pslab.functionals import levelwise_l1
from pslab.rearrangement import approximation_sequence

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=12)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--m", type=int, nargs="+", default=[1, 2, 4, 8, 16])
    args = ap.parse_args()
    spec = family_devils_staircase(args.n, cantor_depth=args.depth)
    dec = spec.decomposition()
    print(f"{'m':>4} {'||u_m - u||_1':>14}")
    for m in args.m:
        um = approximation_sequence(spec, dec, m)
        print(f"{m:>4} {levelwise_l1(um, spec)[0]:14.6e}")
