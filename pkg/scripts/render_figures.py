"""Render plotly HTML figures from the CSV outputs of a run.

Usage: python scripts/render_figures.py RESULTS_DIR [FIGURES_DIR]
"""

from __future__ import annotations

import json
import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from src.reports.csv_writer import HINDSIGHT_POLICY, read_allocation_csv, read_metrics_csv  # noqa: E402
from src.reports.figures import allocation_figure, running_average_figure  # noqa: E402

_SNAPSHOT = re.compile(r"allocation_t(\d+)\.csv$")


def _hindsight_average(results: Path) -> float | None:
    summary = results / "summary.json"
    if not summary.exists():
        return None
    replications = json.loads(summary.read_text(encoding="utf-8"))["replications"]
    return replications[0]["hindsight_average"] if replications else None


def render(results: Path, figures: Path) -> list[Path]:
    figures.mkdir(parents=True, exist_ok=True)
    written = []

    metrics = read_metrics_csv(results / "metrics.csv")
    fig = running_average_figure(metrics, hindsight_average=_hindsight_average(results))
    target = figures / "running_average.html"
    fig.write_html(target)
    written.append(target)

    snapshots = sorted(
        (int(m.group(1)), path)
        for path in results.glob("allocation_t*.csv")
        if (m := _SNAPSHOT.search(path.name))
    )
    for slot, path in snapshots:
        allocations = read_allocation_csv(path)
        # Benchmark bars last.
        if HINDSIGHT_POLICY in allocations:
            allocations[HINDSIGHT_POLICY] = allocations.pop(HINDSIGHT_POLICY)
        target = figures / f"allocation_t{slot}.html"
        allocation_figure(allocations, slot).write_html(target)
        written.append(target)
    return written


def main() -> None:
    if len(sys.argv) < 2:
        print(__doc__)
        sys.exit(2)
    results = Path(sys.argv[1])
    figures = Path(sys.argv[2]) if len(sys.argv) > 2 else results / "figures"
    for path in render(results, figures):
        print(path)


if __name__ == "__main__":
    main()
