"""Fitted total-variation growth constants c under transverse refinement.

For each scenario the smallest c with tv(t) <= (1 + ct) tv0 (1 + ct e^{ct})
at every output time is fitted at N, 2N and 4N transverse cells.

    python scripts/tv_envelopes.py [--factors 1,2,4]
"""

import argparse

from bvlab.harness.acceptance import tv_history
from bvlab.harness.config import shipped
from bvlab.viscous_solver import fit_tv_envelope

SCENARIOS = ("ac_4_weighted", "ac_4_band", "ac_4_revolution", "ac_4_viscous")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--factors", default="1,2,4")
    args = p.parse_args()
    factors = [int(v) for v in args.factors.split(",")]
    print("scenario," + ",".join(f"c_x{f}" for f in factors))
    for name in SCENARIOS:
        base = shipped(name).scenario
        cs = []
        for f in factors:
            res = (base.resolution[0] * f,) + tuple(base.resolution[1:])
            t, tv, _ = tv_history(base.replace(resolution=res), per_step=False)
            cs.append(fit_tv_envelope(t, tv, tv[0]))
        print(name + "," + ",".join("%.6g" % c for c in cs))


if __name__ == "__main__":
    main()
