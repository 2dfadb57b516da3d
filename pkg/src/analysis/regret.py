"""Regret and cost-series helpers."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


class RegretLengthError(ValueError):
    pass


def compute_regret(
    policy_costs: Sequence[float] | np.ndarray,
    hindsight_slot_costs: Sequence[float] | np.ndarray,
) -> np.ndarray:
    """R_t = sum over s <= t of (cost_s - f_s(y*)); R_T is the last element."""
    costs = np.asarray(policy_costs, dtype=float)
    benchmark = np.asarray(hindsight_slot_costs, dtype=float)
    if costs.shape != benchmark.shape:
        raise RegretLengthError(
            f"{costs.size} policy costs against {benchmark.size} hindsight costs"
        )
    return np.cumsum(costs - benchmark)


def running_average(costs: Sequence[float] | np.ndarray) -> np.ndarray:
    costs = np.asarray(costs, dtype=float)
    return np.cumsum(costs) / np.arange(1, costs.size + 1)


def regret_bound(c_star: float, capacity: float, j_star: int, horizon: int) -> float:
    """Worst-case DOCP regret after ``horizon`` slots: c* sqrt(2 C J*) sqrt(T)."""
    return c_star * math.sqrt(2.0 * capacity * j_star) * math.sqrt(horizon)


def cosine_similarity(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    norm = float(np.linalg.norm(a) * np.linalg.norm(b))
    if norm == 0.0:
        return 0.0
    return float(a @ b) / norm
