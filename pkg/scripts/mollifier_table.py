"""Distances between mollified and raw initial data across eps.

Columns: eps, L1 distance, |tv_jump(u0e) - tv_jump(u0)|, and the second-order
surrogate eps (|u0e|_L1 + |grad u0e|_L1 + |Laplace u0e|_L1) over tv_jump(u0).

    python scripts/mollifier_table.py [--scenario ac_11]
"""

import argparse

import numpy as np

from bvlab.bv_trace import tv_jump
from bvlab.grid import integrate
from bvlab.harness.config import shipped
from bvlab.harness.runner import h21_surrogate
from bvlab.problem import mollify_initial


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenario", default="ac_11")
    p.add_argument("--eps", default="0.1,0.05,0.025")
    args = p.parse_args()
    sc = shipped(args.scenario).scenario
    grid = sc.build_grid()
    u0 = sc.initial_field(grid).values
    tv0 = tv_jump(grid, u0)
    print("eps,l1_distance,tv_distance,h21_over_tv0,sup_ratio")
    for eps in (float(v) for v in args.eps.split(",")):
        ue = mollify_initial(grid, u0, eps, sc.mollifier).values
        print("%g,%.6g,%.6g,%.6g,%.6g" % (eps, integrate(grid, np.abs(ue - u0)), abs(tv_jump(grid, ue) - tv0),
                                         h21_surrogate(grid, ue, eps) / tv0, np.max(np.abs(ue)) / np.max(np.abs(u0))))


if __name__ == "__main__":
    main()
