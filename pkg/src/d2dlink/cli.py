"""Command-line entry point: run, sweep, validate, print-schema."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import SCHEMA_VERSION, ConfigError, config_schema, load_config, sweep_from_file
from .driver import EXIT_FAIL, EXIT_INTERNAL, EXIT_OK, run_single, run_sweep, summary_line

SELECTIONS = ("balanced", "best_power", "best_delay", "all")


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="d2dlink", description="Die-to-die link modeling and collateral generation.")
    p.add_argument("--version", action="version",
                   version=f"d2dlink {__version__} (config schema {SCHEMA_VERSION})")
    p.add_argument("--print-schema", action="store_true", help="print the config JSON schema and exit")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", metavar="{run,sweep,validate,print-schema}")

    def common(sp: argparse.ArgumentParser, out: bool = True):
        sp.add_argument("--config", required=True, type=Path, metavar="PATH")
        if out:
            sp.add_argument("--out", type=Path, default=Path("d2dlink_out"), metavar="DIR")
            sp.add_argument("--select", choices=SELECTIONS, help="override pareto_selection")
            sp.add_argument("--workers", type=_positive_int, metavar="N", help="override max_parallel")
            sp.add_argument("--debug-waveforms", action="store_true", help="dump full-path transients")

    common(sub.add_parser("run", help="single-point run"))
    common(sub.add_parser("sweep", help="parallel Cartesian sweep from the config's sweep section"))
    common(sub.add_parser("validate", help="check a config without running"), out=False)
    sub.add_parser("print-schema", help="print the config JSON schema")
    return p


def _print_config_errors(exc: ConfigError) -> None:
    for ptr, msg in exc.errors:
        print(f"error: {ptr}: {msg}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.print_schema or args.command == "print-schema":
        print(json.dumps(config_schema(), indent=2))
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            print(f"ok: {args.config} (fingerprint {cfg.fingerprint})")
            for key in cfg.overrides():
                print(f"  override: {key}")
            return EXIT_OK
        if args.command == "run":
            cfg = load_config(args.config)
            man = run_single(cfg, args.out, args.select, args.workers, args.debug_waveforms)
        else:
            spec = sweep_from_file(args.config)
            man = run_sweep(spec, args.out, args.select, args.workers, args.debug_waveforms)
    except ConfigError as exc:
        _print_config_errors(exc)
        return EXIT_FAIL
    except Exception as exc:  # last-resort guard; details under --verbose
        logging.getLogger(__name__).debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    print(summary_line(man))
    for p in man.points:
        if p.status != "ok":
            print(f"  {p.name}: {p.status} {p.message}", file=sys.stderr)
    return man.exit_code


if __name__ == "__main__":
    sys.exit(main())
