"""Structured logging for simulation runs (structlog).

Log lines go to stderr; result files and the CLI summary own stdout.
Per-slot events are emitted at DEBUG only.
"""

from __future__ import annotations

import logging
import sys
from contextlib import contextmanager
from typing import Iterator

import structlog


def _parse_level(level: int | str) -> int:
    if isinstance(level, int):
        return level
    return logging.getLevelNamesMapping().get(level.upper(), logging.INFO)


def _console_renderer() -> structlog.types.Processor:
    colors = sys.stderr.isatty()
    if colors and sys.platform == "win32":
        try:
            import colorama

            colorama.just_fix_windows_console()
        except ImportError:
            colors = False
    return structlog.dev.ConsoleRenderer(colors=colors)


def configure_logging(*, json_output: bool = False, level: int | str = logging.INFO) -> None:
    """Set up structlog with console or JSON rendering on stderr."""
    renderer = structlog.processors.JSONRenderer() if json_output else _console_renderer()
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(_parse_level(level)),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=True,
    )


def get_logger(name: str | None = None) -> structlog.stdlib.BoundLogger:
    """Return a bound logger tagged with ``component=name``."""
    logger = structlog.get_logger()
    if name:
        logger = logger.bind(component=name)
    return logger


@contextmanager
def replication_context(replication: int, seed: int) -> Iterator[None]:
    """Tag every event logged inside the block with its replication and seed."""
    with structlog.contextvars.bound_contextvars(replication=replication, seed=seed):
        yield
