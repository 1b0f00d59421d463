"""Feasibility of the three regret problems on a logarithmic level grid.

Prints one row per level with the verified weighted norm of each problem
(``-`` where infeasible). Useful to see how sharp each threshold is.
"""

from __future__ import annotations

import argparse

import numpy as np

from robregret.example import scalar_plant
from robregret.robsyn import feasible_nominal_regret, feasible_robust_regret_fixed, feasible_robust_regret_unc

CHECKS = {"ar": feasible_nominal_regret, "rob": feasible_robust_regret_fixed, "robunc": feasible_robust_regret_unc}


def sweep(levels):
    P = scalar_plant()
    rows = []
    for g in levels:
        row = [g]
        for check in CHECKS.values():
            try:
                res = check(P, g)
            except Exception:
                res = None
            row.append(None if res is None else res.gamma_achieved)
        rows.append(row)
    return rows


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--lo", type=float, default=0.5)
    p.add_argument("--hi", type=float, default=8.0)
    p.add_argument("-n", type=int, default=13)
    args = p.parse_args()
    print("gamma_R," + ",".join(CHECKS))
    for row in sweep(np.geomspace(args.lo, args.hi, args.n)):
        cells = [f"{row[0]:.4g}"] + ["-" if v is None else f"{v:.6f}" for v in row[1:]]
        print(",".join(cells))
