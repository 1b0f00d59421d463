"""Relative error of the affine inverse-factor fit over the uncertainty range.

For each level the fit ``N_0 + delta N_1`` is compared with the exact inverse
factor at every ``delta`` of the grid (max over frequency).
"""

from __future__ import annotations

import argparse

import numpy as np

from robregret.example import scalar_plant
from robregret.robsyn import factor_factory
from robregret.uncapprox import approximation_error, linearize_inverse

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--levels", type=float, nargs="+", default=[0.94, 3.15, 3.75])
    p.add_argument("--points", type=int, default=21)
    args = p.parse_args()
    P = scalar_plant()
    deltas = np.linspace(-1.0, 1.0, args.points)
    print("gamma_R," + ",".join(f"{d:.2f}" for d in deltas))
    for g in args.levels:
        fac = factor_factory(P, g)
        rep = approximation_error(linearize_inverse(fac, P.block), fac, deltas)
        print(f"{g:g}," + ",".join(f"{e:.3e}" for e in rep["errors"]))
