"""Command-line interface.

    rirsim <command> --config file.cfg [--out DIR] [--normalize] [--workers N]
    rirsim reproduce figN [--out DIR] [--workers N]

Exit codes: 0 success; 2 config error (parse/validation); 3 numerical
failure; 4 partial scan (some grid points failed, see manifest.json).
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources

from ._version import __version__
from .config import COMMANDS, ParseError, load_config, parse_config
from .kernels import NonFiniteIntegrand
from .oracle import StabilityError
from .params import ValidationError
from .runner import run

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4

_FIGURES = tuple(f"fig{n}" for n in range(2, 11))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rirsim",
        description="Recoil-induced resonance spectroscopy and atomic "
                    "memory simulator",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} scan from a config file")
        p.add_argument("--config", required=True, help="YAML config path")
        _common_flags(p)
    p = sub.add_parser("reproduce", help="run a bundled figure preset")
    p.add_argument("figure", choices=_FIGURES,
                   help="which bundled preset to run")
    _common_flags(p)
    return parser


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="output directory override")
    p.add_argument("--normalize", action="store_true",
                   help="peak-normalize emitted values")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel workers over grid points (default 1)")


def preset_text(name: str) -> str:
    """Raw YAML text of a bundled preset (fig2..fig10, oracle)."""
    return (resources.files("rirsim.presets") / f"{name}.cfg").read_text(
        encoding="utf-8")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "reproduce":
            config = parse_config(preset_text(args.figure))
            command = None  # presets carry their own command key
        else:
            config = load_config(args.config)
            command = args.command
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        manifest = run(config, command, out_dir=args.out,
                       normalize=args.normalize, workers=args.workers)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteIntegrand, StabilityError, ArithmeticError,
            ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    if manifest.status != "ok":
        print(f"partial failure: {len(manifest.failures)} scan point(s) "
              f"failed; see manifest.json", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
