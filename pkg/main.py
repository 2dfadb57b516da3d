"""D2D caching simulator: main entry point.

Subcommands:
  run CONFIG [OUTPUT_DIR]               run every replication of an experiment
  generate-trace CONFIG OUTPUT          write the request trace of one replication
  hindsight CONFIG TRACE OUTPUT         best static caches for a trace file
  validate-config CONFIG                check an experiment file

Exit codes: 0 success, 2 invalid input or configuration, 3 unwritable output.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from src.analysis.hindsight import aggregate, best_static
from src.core.config import ConfigError, get_settings, load_config
from src.core.logging import configure_logging, get_logger
from src.core.runner import OutputPathError, RunOptions, prepare_replication, run_experiment
from src.data.trace_io import read_trace, write_trace
from src.network.requests import Trace
from src.reports.csv_writer import write_cache_csv

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_UNWRITABLE = 3


def _writable(path: Path, write) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return write(path)
    except OSError as exc:
        raise OutputPathError(f"cannot write {path}: {exc.strerror or exc}") from exc


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    settings = get_settings()
    output_dir = args.output_dir or config.output.directory or settings.output_dir
    results = run_experiment(config, output_dir, config_path=str(args.config), settings=settings)

    print(f"\n  Results written to {output_dir}")
    for metrics in results:
        print(f"\n  Replication {metrics.replication} (seed {metrics.seed}, T={metrics.horizon})")
        print(f"    best static      {metrics.hindsight_total / metrics.horizon:10.4f} per slot")
        print(f"    regret bound     {metrics.regret_bound:10.1f}")
        for series in metrics.policies:
            print(
                f"    {series.name:<16} {series.final_running_average:10.4f} per slot"
                f"   regret {series.final_regret:10.1f}"
            )
    return EXIT_OK


def cmd_generate_trace(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    prepared = prepare_replication(config, args.replication)
    _writable(Path(args.output), lambda p: write_trace(prepared.trace, p))
    print(f"{len(prepared.trace)} requests written to {args.output}")
    return EXIT_OK


def cmd_hindsight(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    prepared = prepare_replication(config, args.replication)
    trace = read_trace(args.trace)
    trace.check_against(prepared.network)
    trace = Trace(trace.requests, prepared.schedule)

    options = RunOptions.resolve(config, get_settings())
    result = best_static(
        aggregate(trace),
        prepared.network,
        options.hindsight_max_iters,
        options.hindsight_tol,
        polish=options.hindsight_polish,
    )
    _writable(Path(args.output), lambda p: write_cache_csv(result.cache, p))
    print(
        f"total cost {result.total_cost:.6f} over {len(trace)} slots "
        f"({result.method}, converged={result.converged}); caches written to {args.output}"
    )
    return EXIT_OK


def cmd_validate_config(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    print(
        f"{args.config}: OK (schema {config.schema_version}, {len(config.policies)} policies, "
        f"T={config.horizon}, {config.replications} replication(s))"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="d2dcache", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("config", type=Path)
    run.add_argument("output_dir", nargs="?", default=None)
    run.set_defaults(handler=cmd_run)

    gen = sub.add_parser("generate-trace", help="write the request trace of one replication")
    gen.add_argument("config", type=Path)
    gen.add_argument("output", type=Path)
    gen.add_argument("--replication", type=int, default=0)
    gen.set_defaults(handler=cmd_generate_trace)

    hind = sub.add_parser("hindsight", help="best static caches for a trace file")
    hind.add_argument("config", type=Path)
    hind.add_argument("trace", type=Path)
    hind.add_argument("output", type=Path)
    hind.add_argument("--replication", type=int, default=0)
    hind.set_defaults(handler=cmd_hindsight)

    check = sub.add_parser("validate-config", help="check an experiment file")
    check.add_argument("config", type=Path)
    check.set_defaults(handler=cmd_validate_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    """CLI entry point."""
    args = build_parser().parse_args(argv)
    settings = get_settings()
    configure_logging(json_output=settings.log_json, level=settings.log_level)
    logger = get_logger("main")

    try:
        return args.handler(args)
    except ConfigError as exc:
        logger.error("config_invalid", diagnostics=exc.diagnostics)
        for line in exc.diagnostics:
            print(line, file=sys.stderr)
        return EXIT_INVALID
    except OutputPathError as exc:
        logger.error("output_unwritable", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNWRITABLE
    except (ValueError, OSError) as exc:
        logger.error("command_failed", command=args.command, error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
