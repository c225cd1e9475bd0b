"""Command line: ``spincorr <experiment> --config <file> [--set key=value]... --out <dir>``."""

import argparse
import sys

from .config import EXPERIMENTS, CapacityError, ConfigError, load_config

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY = 0, 2, 3


def make_parser():
    p = argparse.ArgumentParser(
        prog="spincorr",
        description="Quantum and classical kicked coupled-spin experiments.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="key = value file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override one config entry (repeatable)")
    p.add_argument("--out", required=True, help="output directory for CSV files")
    return p


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which is also our config-error code
        return int(exc.code or 0)

    from .experiments import run_experiment

    try:
        cfg = load_config(args.experiment, args.config, args.overrides)
        _, paths = run_experiment(cfg, args.out)
    except ConfigError as exc:
        print(f"spincorr: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"spincorr: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
