"""Command line interface: run / sweep / bias over config files.

Exit codes: 0 success, 2 config error, 3 numeric failure.
"""

import argparse
import sys

from .errors import ConfigError, NumericRangeError, SolverError
from . import harness


def _add_common(sub):
    sub.add_argument("config", help="experiment config file (INI grammar, see README)")
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--out", default=None, help="override the output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="inrr",
                                     description="coordinate-network experiment harness")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, desc in (("run", "train one configured experiment"),
                       ("sweep", "hyper-parameter sweep (delta or omega0)"),
                       ("bias", "implicit-bias study over model families")):
        _add_common(subs.add_parser(name, help=desc))
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    try:
        cfg = harness.load_config(args.config, overrides)
        if args.command == "sweep":
            cfg.task = "ntk_sweep"
        elif args.command == "bias":
            cfg.task = "implicit_bias"
        result = harness.run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericRangeError, SolverError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    if hasattr(result, "final"):
        for key, value in result.final.items():
            print(f"{key} = {value}")
    print("done")
    return 0


if __name__ == "__main__":
    sys.exit(main())
