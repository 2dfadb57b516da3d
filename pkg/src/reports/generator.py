"""Experiment report generator: Jinja2-based markdown summary renderer.

Takes an ExperimentSummary produced by the runner and renders ``report.md``
with per-policy costs, regret against the hindsight benchmark and the
allocation similarity at each snapshot slot.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

from jinja2 import Environment, FileSystemLoader

from src.core.models import ExperimentSummary

TEMPLATE_DIR = Path(__file__).parent / "templates"


def _fmt_cost(value: Any) -> str:
    """Format a cost with three decimals."""
    if value is None:
        return "N/A"
    try:
        return f"{float(value):.3f}"
    except (TypeError, ValueError):
        return str(value)


def _fmt_percent(value: Any) -> str:
    if value is None:
        return "N/A"
    try:
        return f"{float(value):.1%}"
    except (TypeError, ValueError):
        return str(value)


def _fmt_duration(value: Any) -> str:
    """Format seconds as a readable duration."""
    if value is None:
        return "N/A"
    try:
        secs = float(value)
        if secs < 60:
            return f"{secs:.1f}s"
        mins = int(secs // 60)
        remaining = secs % 60
        return f"{mins}m {remaining:.0f}s"
    except (TypeError, ValueError):
        return str(value)


def _get_jinja_env() -> Environment:
    env = Environment(
        loader=FileSystemLoader(str(TEMPLATE_DIR)),
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )
    env.filters["fmt_cost"] = _fmt_cost
    env.filters["fmt_percent"] = _fmt_percent
    env.filters["fmt_duration"] = _fmt_duration
    return env


def generate_experiment_report(summary: ExperimentSummary, title: str = "Experiment report") -> str:
    """Render the markdown summary of a finished experiment."""
    env = _get_jinja_env()
    template = env.get_template("experiment_report.md.j2")
    policy_names = list(summary.mean_running_average)
    return template.render(
        title=title,
        config_path=summary.config_path or "N/A",
        replications=summary.replications,
        policy_names=policy_names,
        mean_running_average=summary.mean_running_average,
        mean_final_regret=summary.mean_final_regret,
    )
