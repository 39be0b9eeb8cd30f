"""Command line: ``speclab run --config <file>`` and ``speclab list``.

Exit codes: 0 when every expected verdict matched, 2 on a verdict mismatch,
1 on a configuration or execution error.
"""

from __future__ import annotations

import argparse
import sys

from .config import ExperimentConfig
from .errors import ConfigError
from .runner import list_suites, resolve_config, run_config

EXIT_OK, EXIT_ERROR, EXIT_MISMATCH = 0, 1, 2


def _print_suites(verbose: bool, directory=None) -> int:
    for name, desc, claim in list_suites(directory):
        print(f"{name}: {desc}")
        if verbose and claim:
            print(f"    verifies: {claim}")
    return EXIT_OK


def _run(args) -> int:
    path = resolve_config(args.config)
    try:
        cfg = ExperimentConfig.load(path)
    except FileNotFoundError:
        print(f"error: no config file or bundled suite named {args.config!r}", file=sys.stderr)
        return EXIT_ERROR
    except ConfigError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out = args.out or cfg.output_dir or f"speclab-out/{cfg.name}"
    try:
        report, ok = run_config(cfg, out, args.seed_override)
    except Exception as exc:  # any failure inside a check is an execution error
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for chk in report["checks"]:
        status = "ok" if chk["match"] else "MISMATCH"
        print(f"[{status}] {chk['name']}: observed {chk['observed']} expected {chk['expected']}")
    print(f"report written to {out}/report.json")
    return EXIT_OK if ok else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="speclab", description="Spectral multiplier and heat kernel experiments.")
    p.add_argument("--list", action="store_true", help="list bundled suites and exit")
    p.add_argument("--verbose", action="store_true", help="with --list, show the claim each suite checks")
    sub = p.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True, help="config file or bundled suite name")
    run.add_argument("--out", help="output directory")
    run.add_argument("--seed-override", type=int, help="replace the Monte Carlo seed")
    ls = sub.add_parser("list", help="list bundled suites")
    ls.add_argument("--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _run(args)
    if args.command == "list" or args.list:
        return _print_suites(args.verbose)
    build_parser().print_help()
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
