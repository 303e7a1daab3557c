"""Space-time L1 distance between viscous and hyperbolic runs as eps shrinks.

    python scripts/viscosity_limit.py [--eps 0.1,0.05,0.025] [--output DIR]
"""

import argparse

from bvlab.harness.config import shipped
from bvlab.harness.runner import limit

SCENARIOS = ("ac_9", "ac_9_band", "ac_9_linear")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--eps", default="0.1,0.05,0.025")
    p.add_argument("--output", default=None)
    args = p.parse_args()
    eps = [float(v) for v in args.eps.split(",")]
    for name in SCENARIOS:
        rows, path = limit(shipped(name), eps, args.output)
        print(f"{name} -> {path}  (fitted rate in sqrt(eps): {rows[0].fitted_rate:.3f})")
        for r in rows:
            print(f"  eps={r.eps:<7g} distance={r.l1_distance:.4e}")


if __name__ == "__main__":
    main()
