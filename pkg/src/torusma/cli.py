"""Command line interface.

Usage: torusma <subcommand> [--config FILE] [--out DIR] [--suite NAME]
[--snapshot-fields] [--verbose].  Without --config the built-in default
configuration is used, so every subcommand can be tried immediately.
"""

import argparse
import sys

from .runner import run_command

_SUBCOMMANDS = {
    "solve-ma": "solve one scalar equation and report the convergence "
                "trace",
    "sweep": "solve the metric family along the configured s-schedule",
    "normalized-sweep": "sweep the normalized collapsing family and "
                        "evaluate the bound suite",
    "maxtime": "locate the maximal feasible parameter by closed form and "
               "bisection",
    "verify-identities": "check the algebraic and curvature identities on "
                         "seeded data",
    "acceptance": "run the acceptance criteria and print a pass/fail "
                  "table",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="torusma",
        description="Numerical laboratory for a Hermitian metric family "
                    "on flat complex tori, driven by a scalar "
                    "Monge-Ampere reduction.")
    sub = parser.add_subparsers(dest="subcommand", required=True,
                                metavar="subcommand")
    for name, help_text in _SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="FILE", default=None,
                       help="TOML experiment configuration "
                            "(default: built-in)")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (overrides the config)")
        p.add_argument("--suite", metavar="NAME", default=None,
                       help="named criterion subset for the acceptance "
                            "subcommand")
        p.add_argument("--snapshot-fields", action="store_true",
                       help="write binary snapshots of solved fields")
        p.add_argument("--verbose", action="store_true",
                       help="progress lines on stderr and per-iteration "
                            "solver traces")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return run_command(args.subcommand,
                       config_path=args.config,
                       out=args.out,
                       suite=args.suite,
                       snapshot_fields=args.snapshot_fields,
                       verbose=args.verbose)


if __name__ == "__main__":
    sys.exit(main())
