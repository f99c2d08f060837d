"""
Command-line interface of the benchmark harness.

    hhmala-bench run <config> [--out DIR] [--seed N] [--threads N] [--set key=value ...]
    hhmala-bench check
    hhmala-bench plot <csv> --out DIR

Exit codes: 0 success, 1 failed cell or check, 2 configuration error.
"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional

from loguru import logger
from pydantic import ValidationError

from hhmala.config import Config
from hhmala.errors import ConfigError

from .core.config import settings
from .core.logging import setup_logging
from .schemas.experiment import ExperimentConfig
from .services.checks import run_checks
from .services.config_loader import library_defaults, parse_config
from .services.reporting import emit_plots, read_records, write_csv, write_manifest, write_traces
from .services.runner import run_experiment

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def _key_help() -> str:
    lines = ["configuration keys (flat 'key = value' file, '#' comments):"]
    for name, field in ExperimentConfig.model_fields.items():
        default = "required" if field.is_required() else f"default {field.default}"
        lines.append(f"  {name:<16} {field.description} ({default})")
    lines.append("")
    lines.append("timing defaults to true and wall-clock columns differ between runs;")
    lines.append("set timing = false (or --set timing=false) for byte-identical results.csv.")
    lines.append("alpha_pca below 0.5 makes the eigen schemes slow to settle (presets use 0.7).")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hhmala-bench",
        description=f"{settings.title}: adaptive MALA preconditioner benchmarks",
        epilog=_key_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", help="Logging level (overrides HHMALA_LOG_LEVEL and config.yaml)")
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.version}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment grid", epilog=_key_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    run.add_argument("config", nargs="?", help="Experiment config file")
    run.add_argument("--out", default=settings.default_out_dir, help="Output directory")
    run.add_argument("--seed", help="Master seed (overrides the file)")
    run.add_argument("--threads", type=int, default=settings.default_threads, help="Worker processes")
    run.add_argument("--dims", help="Comma-separated dimensions (overrides the file)")
    run.add_argument("--scheme", help="Comma-separated schemes (overrides the file)")
    run.add_argument("--repetitions", help="Runs per (scheme, d) (overrides the file)")
    run.add_argument("--iterations", help="Iterations per run (overrides the file)")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="Override any config key")

    sub.add_parser("check", help="Run the invariant and property checks")

    plot = sub.add_parser("plot", help="Draw SVG plots from a results CSV")
    plot.add_argument("csv", help="results.csv written by run")
    plot.add_argument("--out", required=True, help="Output directory")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, str]:
    overrides = {k: getattr(args, k) for k in ("seed", "dims", "scheme", "repetitions", "iterations") if getattr(args, k) is not None}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def _library_config() -> Config:
    path = settings.library_config_path
    if not path or not Path(path).exists():
        return Config()
    try:
        return Config.from_yaml(path)
    except ValidationError as e:
        raise ConfigError(f"Invalid library config {path}: {e.errors()[0]['msg']}") from e


def cmd_run(args: argparse.Namespace, library: Config) -> int:
    config = parse_config(args.config, _overrides(args), defaults=library_defaults(library))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    logger.info(f"Experiment {config.config_hash()}: {config.target}, schemes {config.scheme}, dims {config.dims}")

    records = run_experiment(config, threads=max(1, args.threads))
    write_csv(records, out / "results.csv")
    write_traces(records, out / "traces.csv")
    write_manifest(config, records, out / "manifest.json")
    emit_plots(records, out)

    bad = [r for r in records if r.status != "ok"]
    if bad:
        logger.error(f"{len(bad)} of {len(records)} cells did not finish ok")
        return EXIT_FAILED
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    results = run_checks()
    failed = [r.name for r in results if not r.passed]
    logger.info(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAILED if failed else EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    csv_path = Path(args.csv)
    records = read_records(csv_path, csv_path.with_name("traces.csv"))
    emit_plots(records, args.out)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level or settings.log_level or "INFO")
    try:
        library = _library_config()
        setup_logging(
            args.log_level or settings.log_level or library.logging.level,
            settings.log_format or library.logging.format,
        )
        if args.command == "run":
            return cmd_run(args, library)
        if args.command == "check":
            return cmd_check(args)
        return cmd_plot(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except (OSError, ValueError) as e:
        logger.error(f"Error in {args.command}: {e}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
