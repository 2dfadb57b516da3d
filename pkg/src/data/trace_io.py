"""Plain-text trace and cost-schedule files.

Traces hold one request per line as ``t,user,file``; schedules hold
``t,i,j,cost`` lines where cost may be ``cmax`` to sever a link; mobility
scripts hold ``t,device,x,y`` lines. Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterator, Sequence

from src.data.schedules import CostOverride, MobilityScript, ScheduleError
from src.network.requests import Request, Trace, TraceError


def _records(path: Path, width: int) -> Iterator[tuple[int, list[str]]]:
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, skipinitialspace=True)
        for row in reader:
            fields = [f.strip() for f in row]
            if not any(fields) or fields[0].startswith("#"):
                continue
            if len(fields) != width:
                raise TraceError(
                    f"{path}:{reader.line_num}: expected {width} fields, got {len(fields)}"
                )
            yield reader.line_num, fields


def read_trace(path: str | Path) -> Trace:
    path = Path(path)
    requests = []
    for lineno, (t, user, file) in _records(path, 3):
        try:
            requests.append(Request(int(t), int(user), int(file)))
        except ValueError as exc:
            raise TraceError(f"{path}:{lineno}: {exc}") from exc
    try:
        return Trace(tuple(requests))
    except TraceError as exc:
        raise TraceError(f"{path}: {exc}") from exc


def write_trace(trace: Trace, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write("# t,user,file\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerows((req.slot, req.user, req.file) for req in trace)
    return path


def read_cost_overrides(path: str | Path) -> tuple[CostOverride, ...]:
    path = Path(path)
    overrides = []
    for lineno, (t, i, j, cost) in _records(path, 4):
        try:
            value = None if cost.lower() == "cmax" else float(cost)
            overrides.append(CostOverride(int(t), int(i), int(j), value))
        except ValueError as exc:
            raise ScheduleError(f"{path}:{lineno}: {exc}") from exc
    return tuple(overrides)


def read_mobility(
    path: str | Path,
    range_m: float,
    cost_bands: Sequence[tuple[float, float]],
) -> MobilityScript:
    path = Path(path)
    moves = []
    for lineno, (t, device, x, y) in _records(path, 4):
        try:
            moves.append((int(t), int(device), float(x), float(y)))
        except ValueError as exc:
            raise ScheduleError(f"{path}:{lineno}: {exc}") from exc
    moves.sort(key=lambda move: move[0])
    return MobilityScript(range_m, tuple(tuple(b) for b in cost_bands), tuple(moves))
