"""CSV outputs of an experiment run.

``metrics.csv``            slot, policy, cost, running_avg, regret
``allocation_t<slot>.csv`` file, policy, total_fraction
``hindsight.csv``          device, file, fraction

Floats are written with ``repr`` so reruns produce identical bytes.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from src.core.models import MetricsSeries
from src.network.cache import CacheState

METRICS_HEADER = ("slot", "policy", "cost", "running_avg", "regret")
ALLOCATION_HEADER = ("file", "policy", "total_fraction")
HINDSIGHT_HEADER = ("device", "file", "fraction")
HINDSIGHT_POLICY = "hindsight"


def _num(value: float) -> str:
    return repr(float(value))


def write_metrics_csv(series: MetricsSeries, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for policy in series.policies:
            rows = zip(policy.costs, policy.running_average, policy.regret)
            for slot, (cost, avg, regret) in enumerate(rows, start=1):
                writer.writerow((slot, policy.name, _num(cost), _num(avg), _num(regret)))
    return path


def write_allocation_csv(
    allocations: Mapping[str, Sequence[float] | np.ndarray],
    path: str | Path,
) -> Path:
    """One row per (file, policy); policies are written in mapping order."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(ALLOCATION_HEADER)
        for name, totals in allocations.items():
            for file, value in enumerate(totals):
                writer.writerow((file, name, _num(value)))
    return path


def write_snapshots(series: MetricsSeries, directory: str | Path) -> list[Path]:
    directory = Path(directory)
    slots = sorted({slot for p in series.policies for slot in p.allocations})
    written = []
    for slot in slots:
        allocations: dict[str, Sequence[float]] = {
            p.name: p.allocations[slot] for p in series.policies if slot in p.allocations
        }
        allocations[HINDSIGHT_POLICY] = series.hindsight_allocation
        written.append(write_allocation_csv(allocations, directory / f"allocation_t{slot}.csv"))
    return written


def write_cache_csv(cache: CacheState | np.ndarray, path: str | Path) -> Path:
    y = cache.y if isinstance(cache, CacheState) else np.asarray(cache)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(HINDSIGHT_HEADER)
        for device, row in enumerate(y):
            for file, value in enumerate(row):
                writer.writerow((device, file, _num(value)))
    return path


def read_metrics_csv(path: str | Path) -> dict[str, dict[str, list[float]]]:
    """policy -> column -> values, in slot order."""
    result: dict[str, dict[str, list[float]]] = {}
    with Path(path).open(encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            columns = result.setdefault(
                row["policy"], {"slot": [], "cost": [], "running_avg": [], "regret": []}
            )
            for key in columns:
                columns[key].append(float(row[key]))
    return result


def read_allocation_csv(path: str | Path) -> dict[str, list[float]]:
    result: dict[str, list[float]] = {}
    with Path(path).open(encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            result.setdefault(row["policy"], []).append(float(row["total_fraction"]))
    return result
