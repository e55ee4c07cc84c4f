"""Command-line interface.

Subcommands: analytic, oracle, compare, figure1, validate, packet-info.
Exit codes: 0 success, 2 config error, 3 validation failure, 4 numeric
non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, apply_overrides, default_config_text, parse_config
from . import pipelines

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="wavebarrier",
        description="Sub-packet resolved wave-packet transmission through a rectangular barrier.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("analytic", "evaluate the region-wise approximate wavefunction on a grid"),
        ("oracle", "run the Crank-Nicolson time-domain solver"),
        ("compare", "run oracle vs analytic comparison gates"),
        ("figure1", "emit the first three transmitted sub-packets and their timing"),
        ("validate", "run the closed-form identity table"),
        ("packet-info", "print derived packet quantities and the relevance ledger"),
    ):
        sp = sub.add_parser(name, help=doc)
        sp.add_argument("--config", type=Path, default=None, help="JSON config path")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory prefix")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (dotted paths, repeatable)")
        sp.add_argument("--force", action="store_true",
                        help="run outside the oracle-safe scenario window")
        if name == "validate":
            sp.add_argument("--emit-json", action="store_true",
                            help="also write the table as JSON next to --out")
    sub.add_parser("default-config", help="print the default config document")
    return p


def _load_config(args: argparse.Namespace) -> "pipelines.RunConfig":
    text = args.config.read_text(encoding="utf-8") if args.config else "{}"
    overrides = list(args.override)
    overrides.append(f"mode={args.command}")
    if args.force:
        overrides.append("force=true")
    return parse_config(apply_overrides(text, overrides))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "default-config":
        print(default_config_text())
        return EXIT_OK
    try:
        config = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir: Path = args.out
    try:
        if args.command == "analytic":
            pipelines.analytic_pipeline(config, out_dir)
        elif args.command == "oracle":
            pipelines.oracle_pipeline(config, out_dir)
        elif args.command == "figure1":
            summary = pipelines.figure1_pipeline(config, out_dir)
            for term in summary["terms"]:
                print(f"l={term['l']}: lag={term['lag']:.4f} "
                      f"expected={term['expected_shift']:.4f} "
                      f"consistency={'ok' if term['consistency']['satisfied'] else 'violated'}")
        elif args.command == "compare":
            report = pipelines.compare_pipeline(config, out_dir)
            for name, ok in report["gates"].items():
                print(f"{'pass' if ok else 'FAIL'}  {name}")
            for w in report["warnings"]:
                print(f"warning: {w}", file=sys.stderr)
            if not all(report["gates"].values()):
                return EXIT_VALIDATION
        elif args.command == "validate":
            rows = pipelines.validate_suite()
            for row in rows:
                print(row.line())
            if getattr(args, "emit_json", False):
                payload = {"checks": [row.__dict__ for row in rows]}
                pipelines.write_json(out_dir / f"{config.out_prefix}_validate.json",
                                     payload, config)
            if not all(row.passed for row in rows):
                return EXIT_VALIDATION
        elif args.command == "packet-info":
            print(json.dumps(pipelines.packet_info(config), indent=1, sort_keys=True))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
