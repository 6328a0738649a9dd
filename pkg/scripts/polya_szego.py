"""Discrete Polya-Szego ratios ||grad u*|| / ||grad u|| on random bump fields."""

import argparse

import numpy as np

from pslab.field import gradient_norm_lp, random_bumps
from pslab.functionals import YoungFunction, dirichlet_functional, young_validate
from pslab.rearrangement import rearrange

PL_PHI = {"breakpoints": [[0, 0], [1, 0.5], [2, 2], [3, 4.5]]}

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fields", type=int, default=50)
    ap.add_argument("--resolution", type=int, default=256)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    names = ["p=1.5", "p=2", "p=4", "Phi=t^2", "Phi=PL"]
    phis = [YoungFunction.power(2), young_validate(PL_PHI)]
    ratios = []
    for _ in range(args.fields):
        f = random_bumps(rng, resolution=args.resolution)
        r = rearrange(f)
        row = [gradient_norm_lp(r, p) / gradient_norm_lp(f, p) for p in (1.5, 2.0, 4.0)]
        row += [dirichlet_functional(r, phi) / dirichlet_functional(f, phi) for phi in phis]
        ratios.append(row)
    ratios = np.array(ratios)
    print(f"{'functional':>10} {'min':>8} {'mean':>8} {'max':>8}")
    for name, col in zip(names, ratios.T):
        print(f"{name:>10} {col.min():8.4f} {col.mean():8.4f} {col.max():8.4f}")
