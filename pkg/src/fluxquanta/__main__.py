"""
Command-line entry point.

e.g.

python -m fluxquanta simulate --config bench/heat1d.toml
python -m fluxquanta calibrate --config bench/heat1d.toml --out results
python -m fluxquanta sweep --config bench/heat1d.toml --quiet
"""
import argparse
import logging
import sys

from .commands import COMMANDS


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fluxquanta",
        description="Conservative flux-quantized diffusion solver.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", required=True, help="TOML run configuration")
        sub.add_argument("--out", help="output directory (overrides [output] directory)")
        sub.add_argument("--quota", type=float, help="override [solver] quota")
        sub.add_argument("--steps", type=int, help="override the number of time steps")
        sub.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return COMMANDS[args.command](
        args.config, quota=args.quota, steps=args.steps, out=args.out,
    )


if __name__ == "__main__":
    sys.exit(main())
