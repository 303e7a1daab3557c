"""L1 error tables against the analytic oracles for the shipped convergence scenarios.

    python scripts/convergence_tables.py [--levels 3] [--output DIR]
"""

import argparse

from bvlab.harness.config import shipped
from bvlab.harness.runner import convergence

SCENARIOS = ("ac_10", "ac_10_weighted", "ac_10_shock", "ac_10_rotation", "ac_7_step")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--output", default=None)
    args = p.parse_args()
    for name in SCENARIOS:
        oracle, rows, path = convergence(shipped(name), args.levels, args.output)
        print(f"{name} (oracle: {oracle}) -> {path}")
        for n, err, order in rows:
            print(f"  N={n:<5d} L1={err:.4e}  order={order:.3f}")


if __name__ == "__main__":
    main()
