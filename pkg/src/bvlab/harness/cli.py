"""
Command line entry point.

    bvlab run <cfg>
    bvlab convergence <cfg> --levels k
    bvlab limit <cfg> --eps 0.1,0.05,0.025
    bvlab verify <suite> [--quick]
    bvlab acceptance [--only 1,4,...]

Exit codes: 0 success, 1 a check failed or a run aborted, 2 configuration error.
Artifacts go under $BVLAB_OUTPUT (default ./bvlab_output).
"""

import argparse
import sys

from .. import __version__
from .config import ConfigError

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2


def _floats(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("viscosities must be positive")
    return vals


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bvlab", description="Finite-volume experiments for scalar "
                                "conservation laws on manifolds with boundary.")
    p.add_argument("--version", action="version", version=f"bvlab {__version__}")
    p.add_argument("--output", help="artifact root (overrides $BVLAB_OUTPUT)")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", default=argparse.SUPPRESS, help="artifact root (overrides $BVLAB_OUTPUT)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="run one scenario and write its artifacts")
    r.add_argument("config")

    c = sub.add_parser("convergence", parents=[common], help="L1 errors against the oracle at N, 2N, 4N, ...")
    c.add_argument("config")
    c.add_argument("--levels", type=int, default=3)

    lim = sub.add_parser("limit", parents=[common], help="distance between viscous and hyperbolic runs per eps")
    lim.add_argument("config")
    lim.add_argument("--eps", type=_floats, default=[0.1, 0.05, 0.025])

    v = sub.add_parser("verify", help="run a property suite")
    v.add_argument("suite", choices=("geometry", "trace", "viscous", "entropy", "contraction", "limit", "all"))
    v.add_argument("--quick", action="store_true", help="skip the acceptance criteria in the suite")

    a = sub.add_parser("acceptance", help="run the acceptance criteria")
    a.add_argument("--only", type=_ints, help="comma-separated criterion numbers")
    a.add_argument("--verbose", action="store_true", help="print every check")
    return p


def _cmd_run(args) -> int:
    from .runner import run
    art = run(args.config, args.output)
    print(f"{art.status}: {art.solver} run written to {art.directory}")
    if not art.ok:
        print(art.message, file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _cmd_convergence(args) -> int:
    from .runner import convergence
    if args.levels < 1:
        raise ConfigError("--levels must be >= 1")
    oracle, rows, path = convergence(args.config, args.levels, args.output)
    print(f"oracle: {oracle}")
    print(f"{'N':>6} {'l1_error':>14} {'observed_order':>15}")
    for n, err, order in rows:
        print(f"{n:>6} {err:>14.6e} {order:>15.4f}")
    print(f"written to {path}")
    return EXIT_OK


def _cmd_limit(args) -> int:
    from .runner import limit
    rows, path = limit(args.config, args.eps, args.output)
    print(f"{'eps':>8} {'l1_distance':>14} {'fitted_rate':>12}")
    for r in rows:
        print(f"{r.eps:>8.4g} {r.l1_distance:>14.6e} {r.fitted_rate:>12.4f}")
    print(f"written to {path}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import verify
    report = verify(args.suite, full=not args.quick)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAILURE


def _cmd_acceptance(args) -> int:
    from .acceptance import CRITERIA
    numbers = args.only or sorted(CRITERIA)
    unknown = [n for n in numbers if n not in CRITERIA]
    if unknown:
        raise ConfigError(f"unknown criteria {unknown}")
    ok = True
    for n in numbers:
        crit = CRITERIA[n]()
        print(crit.summary(), flush=True)
        for c in crit.checks:
            if args.verbose or not c.passed:
                print("    " + c.line())
        ok &= crit.passed
    return EXIT_OK if ok else EXIT_FAILURE


COMMANDS = {"run": _cmd_run, "convergence": _cmd_convergence, "limit": _cmd_limit,
            "verify": _cmd_verify, "acceptance": _cmd_acceptance}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
