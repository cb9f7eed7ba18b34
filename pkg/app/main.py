"""
adslens command-line driver

Subcommands:
    families   list registered initial data families and their parameters
    verify     run the selected verification pipelines of a config
    mass       run only the mass and q-matrices pipelines
    report     re-render a saved structured report

Usage:
    adslens verify --config run.toml --format structured --out report.json
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from src.initial_data import list_families
from src.utils import AdsLensError, ConfigError, configure_logging

from .components.pipelines import EXIT_CONFIG, EXIT_INTERNAL, EXIT_PASS, Report, run
from .components.report import FORMATS, ReportIOError, emit_report, to_jsonable, write_csv, write_output
from .config import RunConfig, parse_config, with_overrides

logger = logging.getLogger(__name__)

MASS_PIPELINES = ("mass", "q-matrices")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adslens",
        description="Energy-momentum invariants and spinor checks for asymptotically AdS initial data",
    )
    parser.add_argument("--log-level", default="WARNING", help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    def output_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--format", choices=FORMATS, default="human", help="report format")
        p.add_argument("--out", default=None, help="write the report here instead of stdout")

    families = sub.add_parser("families", help="list registered initial data families")
    families.add_argument("--format", choices=FORMATS, default="human")

    for name, text in (("verify", "run the verification pipelines of a config"),
                       ("mass", "compute energy-momentum and the Hermitian matrices")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="TOML run description")
        p.add_argument("--threads", type=int, default=None, help="worker threads for sphere quadrature")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized property checks")
        output_flags(p)

    report = sub.add_parser("report", help="re-render a saved structured report")
    report.add_argument("path", help="structured report written by verify or mass")
    output_flags(report)
    return parser


def load_config(path: str, threads: Optional[int], seed: Optional[int],
                pipelines: Optional[tuple] = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Cannot read config {path}: {exc}") from exc
    config = parse_config(text)
    if threads is not None and threads < 1:
        raise ConfigError(f"'--threads' must be at least 1, got {threads}")
    if seed is not None and seed < 0:
        raise ConfigError(f"'--seed' must be non-negative, got {seed}")
    return with_overrides(config, threads=threads, seed=seed, pipelines=pipelines)


def _emit(payload: bytes, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
    else:
        write_output(payload, out)


def cmd_families(args: argparse.Namespace) -> int:
    table = list_families()
    if args.format == "structured":
        text = json.dumps(to_jsonable(table.to_dict(orient="records")), sort_keys=True, indent=2) + "\n"
    else:
        text = table.to_string(index=False) + "\n"
    _emit(text.encode("utf-8"), None)
    return EXIT_PASS


def cmd_run(args: argparse.Namespace) -> int:
    pipelines = MASS_PIPELINES if args.command == "mass" else None
    config = load_config(args.config, args.threads, args.seed, pipelines)
    report, code = run(config)
    _emit(emit_report(report, args.format), args.out)
    if config.report is not None and config.report != args.out:
        write_output(emit_report(report, "structured"), config.report)
    write_csv(report, config.csv)
    return code


def cmd_report(args: argparse.Namespace) -> int:
    try:
        raw = json.loads(Path(args.path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"Cannot read report {args.path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Report {args.path} is not valid JSON: {exc}") from exc
    missing = [k for k in ("config", "pipelines", "provenance", "exit_code") if k not in raw]
    if missing:
        raise ConfigError(f"Report {args.path} lacks keys {missing}")
    report = Report(config=raw["config"], pipelines=raw["pipelines"],
                    provenance=raw["provenance"], exit_code=raw["exit_code"])
    _emit(emit_report(report, args.format), args.out)
    return int(report.exit_code)


COMMANDS = {
    "families": cmd_families,
    "verify": cmd_run,
    "mass": cmd_run,
    "report": cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        configure_logging(args.log_level)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"adslens: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReportIOError as exc:
        print(f"adslens: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except AdsLensError as exc:
        print(f"adslens: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        logger.exception("Unexpected error")
        print(f"adslens: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
