"""Run every shipped scenario and print its status and fitted constants.

    python scripts/run_shipped.py [--output DIR] [names ...]
"""

import argparse

from bvlab.harness.config import shipped, shipped_configs
from bvlab.harness.runner import run


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("names", nargs="*")
    p.add_argument("--output", default=None)
    args = p.parse_args()
    names = args.names or [c.stem for c in shipped_configs()]
    failed = 0
    for name in names:
        art = run(shipped(name), args.output)
        consts = " ".join(f"{k}={v:.4g}" for k, v in art.constants.items() if v is not None)
        print(f"{name:<24s} {art.status:<8s} {art.solver:<11s} {consts}")
        failed += not art.ok
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
