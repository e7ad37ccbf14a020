"""Command-line front end: `trunclab <command> [flags]`."""
import argparse
import json
import logging
import sys

from trunclab.client import Client
from trunclab.config import RunConfig
from trunclab.exceptions import TrunclabException

GLOBAL_FLAGS = ("threads", "seed", "budget_mem", "node_budget", "candidate_budget", "segment_size",
                "sample_every", "flush_every", "out_dir", "log_level")

logger = logging.getLogger(__name__)


def _global_options():
    parent = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    group = parent.add_argument_group("global options")
    group.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    group.add_argument("--seed", type=int, help="seed for every random choice of the run")
    group.add_argument("--budget-mem", type=int, help="largest number of integers one sieve segment may hold")
    group.add_argument("--node-budget", type=int, help="branch-and-bound node budget")
    group.add_argument("--candidate-budget", type=int, help="default candidate budget for character searches")
    group.add_argument("--segment-size", type=int, help="sieve segment length")
    group.add_argument("--sample-every", type=int, help="scan report sampling interval")
    group.add_argument("--flush-every", type=int, help="scan checkpoint flush interval")
    group.add_argument("--out-dir", help="directory for JSON, CSV and checkpoint artifacts")
    group.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    return parent


def build_parser():
    parent = _global_options()
    parser = argparse.ArgumentParser(prog="trunclab", description="Extremal truncated sums of multiplicative functions",
                                     parents=[parent])
    commands = parser.add_subparsers(dest="command", required=True)

    scan = commands.add_parser("scan", parents=[parent], help="Polya or Turan sign scan")
    scan.add_argument("--kind", choices=("polya", "turan"), required=True)
    scan.add_argument("--bound", type=int, required=True)
    scan.add_argument("--resume", help="checkpoint file to resume from")
    scan.add_argument("--csv", help="report CSV path")

    delta = commands.add_parser("delta", parents=[parent], help="minimum of the truncated sum over a class")
    delta.add_argument("--x", type=int, required=True)
    delta.add_argument("--class", dest="fclass", choices=("f", "f0", "f1"), default="f1")
    delta.add_argument("--method", choices=("brute", "bnb", "descent"), default="brute")
    delta.add_argument("--starts", type=int, default=4)
    delta.add_argument("--out", help="write the result JSON here as well")

    rounding = commands.add_parser("round", parents=[parent], help="round an assignment to +-1 values")
    rounding.add_argument("--x", type=int, required=True)
    rounding.add_argument("--input", required=True)
    rounding.add_argument("--trace")

    construct = commands.add_parser("construct", parents=[parent], help="window or extremal constructions")
    construct.add_argument("--kind", choices=("window", "extremal"), required=True)
    construct.add_argument("--x", type=int, required=True)
    construct.add_argument("--N", type=int)

    realize = commands.add_parser("realize", parents=[parent], help="realize a sign pattern as a quadratic character")
    realize.add_argument("--pattern", required=True)
    realize.add_argument("--x", type=int, required=True)
    realize.add_argument("--max-candidates", type=int)

    commands.add_parser("constants", parents=[parent], help="the extremal constants")

    rho = commands.add_parser("rho", parents=[parent], help="the Dickman function")
    rho.add_argument("--u", type=float, required=True)
    rho.add_argument("--precision", type=float, default=1e-12)

    verify = commands.add_parser("verify", parents=[parent], help="cross-module verification suites")
    verify.add_argument("--suite", choices=("identities", "oracles", "bounds", "all"), default="all")
    verify.add_argument("--size", choices=("quick", "full"), default="quick")

    return parser


def config_from_args(namespace, environ=None):
    values = vars(namespace)
    overrides = {name: values.pop(name, None) for name in GLOBAL_FLAGS}
    command = values.pop("command")
    args = {k: v for k, v in values.items() if v is not None}
    return RunConfig.from_sources(command, overrides, args, environ)


def dispatch(config):
    """Run one command; returns (exit status, result payload or None)"""
    try:
        payload = Client(config).run()
    except TrunclabException as e:
        logger.error(f"{type(e).__name__}: {e.status}")
        return e.exit_code, None
    return 0, payload


def main(argv=None):
    parser = build_parser()
    namespace = parser.parse_args(argv)
    try:
        config = config_from_args(namespace)
    except TrunclabException as e:
        print(f"trunclab: {e.status}", file=sys.stderr)
        return e.exit_code

    logging.basicConfig(level=config.log_level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    status, payload = dispatch(config)
    if payload is not None:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return status


if __name__ == "__main__":
    sys.exit(main())
