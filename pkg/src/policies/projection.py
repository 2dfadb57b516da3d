"""Euclidean projection onto the capped box {y in [0,1]^N : sum(y) <= C}.

The projection is clip(v - theta, 0, 1) with theta = 0 when the clipped
vector already fits, otherwise the smallest theta > 0 with
sum_n clip(v_n - theta, 0, 1) = C. The sum is piecewise linear and
non-increasing in theta with breakpoints at v_n - 1 and v_n, so sorting the
breakpoints and walking the segments finds theta in O(N log N).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUM_TOL = 1e-12


class CapacityError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectionResult:
    y: np.ndarray
    theta: float
    saturated_capacity: bool


def _shift(v: np.ndarray, capacity: float) -> float:
    clipped_total = np.clip(v, 0.0, 1.0).sum()
    # Entries strictly inside the sloped part of clip(v - theta) just above theta = 0.
    active = np.count_nonzero((v > 0.0) & (v <= 1.0))

    starts = v[v > 1.0] - 1.0
    ends = v[v > 0.0]
    thetas = np.concatenate([starts, ends])
    deltas = np.concatenate([np.ones(starts.size), -np.ones(ends.size)])
    order = np.argsort(thetas, kind="stable")
    thetas, deltas = thetas[order], deltas[order]

    # Slope magnitude on the segment ending at each breakpoint.
    slopes = active + np.concatenate([[0.0], np.cumsum(deltas)[:-1]])
    lengths = np.diff(np.concatenate([[0.0], thetas]))
    totals = clipped_total - np.cumsum(slopes * lengths)

    crossed = np.nonzero(totals <= capacity + SUM_TOL)[0]
    k = crossed[0] if crossed.size else thetas.size - 1
    left_theta = thetas[k - 1] if k > 0 else 0.0
    left_total = totals[k - 1] if k > 0 else clipped_total
    if slopes[k] <= 0:
        return float(left_theta)
    return float(left_theta + (left_total - capacity) / slopes[k])


def project_capped_box(v: np.ndarray, capacity: float) -> ProjectionResult:
    """argmin ||y - v|| over y in [0,1]^N with sum(y) <= capacity."""
    v = np.asarray(v, dtype=float)
    if capacity < 0 or capacity > v.size:
        raise CapacityError(f"capacity {capacity} outside [0, {v.size}]")

    clipped = np.clip(v, 0.0, 1.0)
    if clipped.sum() <= capacity + SUM_TOL:
        return ProjectionResult(clipped, 0.0, False)

    theta = _shift(v, capacity)
    return ProjectionResult(np.clip(v - theta, 0.0, 1.0), theta, True)


def project_rows(matrix: np.ndarray, capacities: np.ndarray) -> np.ndarray:
    """Project every row of ``matrix`` independently onto its own capped box."""
    out = np.empty_like(matrix, dtype=float)
    for i, row in enumerate(matrix):
        out[i] = project_capped_box(row, float(capacities[i])).y
    return out
