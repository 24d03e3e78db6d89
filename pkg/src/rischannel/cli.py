"""Command-line entry point: ``rischannel <experiment> --config PATH [--out PATH] [--seed N] [--format csv|json]``.

Exit status: 0 on success, 2 on a configuration error, 1 on a runtime error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from typing import Optional, Sequence

from . import __version__
from .config import FORMATS, KINDS, U64_MAX, ConfigError, load_config, schema_json
from .experiments import ExperimentError, run_experiment
from .output import emit, render

log = logging.getLogger("rischannel")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _seed(text: str) -> int:
    try:
        val = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text!r}") from None
    if not 0 <= val <= U64_MAX:
        raise argparse.ArgumentTypeError(f"seed {val} is outside [0, 2**64 - 1]")
    return val


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors already; keep the message on stderr
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rischannel", description="RIS channel experiments: figure data as CSV or JSON.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="kind", metavar="EXPERIMENT", parser_class=_Parser)
    sub.required = True
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True, metavar="PATH", help="JSON experiment configuration")
        p.add_argument("--out", metavar="PATH", help="output file (default: output.path from the config, else stdout)")
        p.add_argument("--seed", type=_seed, metavar="U64", help="override the config seed")
        p.add_argument("--format", choices=FORMATS, help="output format (default: output.format, else csv)")
    sub.add_parser("schema", help="print the JSON schema for configuration files")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.kind == "schema":
        sys.stdout.write(schema_json())
        return EXIT_OK
    try:
        cfg = load_config(args.config)
        if cfg.kind != args.kind:
            raise ConfigError(f"$.experiment: config is for {cfg.kind!r}, subcommand is {args.kind!r}")
        output = dict(cfg.output)
        if args.format:
            output["format"] = args.format
        if args.out:
            output["path"] = args.out
        cfg = replace(cfg, seed=cfg.seed if args.seed is None else args.seed, output=output)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("running %s (seed %d)", cfg.kind, cfg.seed)
    try:
        table = run_experiment(cfg)
        fmt = cfg.output["format"]
        if cfg.output.get("path"):
            emit(table, fmt, cfg.output["path"])
            log.info("wrote %d rows to %s", len(table.rows), cfg.output["path"])
        else:
            sys.stdout.write(render(table, fmt))
    except (ExperimentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
