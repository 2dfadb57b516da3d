"""D2D network topology: devices, base station and link costs.

The cost matrix is (I+1)x(I+1) with the base station at index 0, so device
``i`` (0-based) sits at matrix index ``i + 1``. Absent links carry the
``c_max`` sentinel instead of being removed, which lets dynamic cost
schedules sever and restore links without changing the matrix shape.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Sequence

import numpy as np

# Routing source id of the base station.
BS = -1


class NetworkError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Network:
    cost: np.ndarray
    capacities: np.ndarray
    catalog_size: int
    c_max: float
    positions: np.ndarray | None = None

    def __post_init__(self) -> None:
        cost = np.array(self.cost, dtype=float)
        capacities = np.array(self.capacities, dtype=int).reshape(-1)
        if cost.ndim != 2 or cost.shape[0] != cost.shape[1] or cost.shape[0] < 2:
            raise NetworkError(f"cost matrix must be square with at least one device, got {cost.shape}")
        device_count = cost.shape[0] - 1
        if capacities.shape[0] != device_count:
            raise NetworkError(
                f"{capacities.shape[0]} capacities given for {device_count} devices"
            )
        if self.catalog_size < 1:
            raise NetworkError("catalog_size must be positive")
        if not np.all(np.isfinite(cost)) or np.any(cost < 0):
            raise NetworkError("link costs must be finite and non-negative")
        if np.any(capacities < 0) or np.any(capacities >= self.catalog_size):
            raise NetworkError("every capacity must satisfy 0 <= C_i < N")

        d2d = cost[1:, 1:]
        bs = cost[1:, 0]
        if np.any(np.diag(d2d) != 0):
            raise NetworkError("devices must reach their own cache at cost 0")
        if self.c_max <= bs.max():
            raise NetworkError(f"c_max={self.c_max} must exceed every BS cost (max {bs.max()})")
        live = (d2d < self.c_max) & ~np.eye(device_count, dtype=bool)
        rows, cols = np.nonzero(live & (d2d >= bs[:, None]))
        if rows.size:
            raise NetworkError(
                f"D2D link ({rows[0]}, {cols[0]}) costs {d2d[rows[0], cols[0]]}, "
                f"not below the BS cost {bs[rows[0]]}"
            )

        cost.setflags(write=False)
        capacities.setflags(write=False)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "capacities", capacities)
        if self.positions is not None:
            positions = np.array(self.positions, dtype=float)
            positions.setflags(write=False)
            object.__setattr__(self, "positions", positions)

    # ── Views ───────────────────────────────────────────────────

    @property
    def device_count(self) -> int:
        return self.cost.shape[0] - 1

    @property
    def bs_cost(self) -> np.ndarray:
        """c_i0 for every device."""
        return self.cost[1:, 0]

    @property
    def d2d_cost(self) -> np.ndarray:
        return self.cost[1:, 1:]

    @cached_property
    def adjacency(self) -> np.ndarray:
        """l_ij, including the trivial self link."""
        return self.d2d_cost < self.c_max

    @cached_property
    def _neighbourhoods(self) -> tuple[tuple[int, ...], ...]:
        result = []
        for i in range(self.device_count):
            members = np.nonzero(self.adjacency[i])[0]
            order = sorted(members.tolist(), key=lambda j: (self.d2d_cost[i, j], j))
            result.append(tuple(order))
        return tuple(result)

    def neighbourhood(self, device: int) -> tuple[int, ...]:
        """D2D sources of ``device`` (itself included), cheapest first; the BS is implicit."""
        return self._neighbourhoods[device]

    # ── Regret bound parameters ─────────────────────────────────

    @property
    def c_star(self) -> float:
        return float(self.bs_cost.max())

    @property
    def max_capacity(self) -> int:
        return int(self.capacities.max())

    @property
    def j_star(self) -> int:
        """Largest |J(i)| counting the device itself and the BS."""
        return max(len(n) for n in self._neighbourhoods) + 1

    def with_costs(self, cost: np.ndarray) -> Network:
        return replace(self, cost=cost)


def band_costs(
    distances: np.ndarray,
    range_m: float,
    cost_bands: Sequence[tuple[float, float]],
    c_max: float,
) -> np.ndarray:
    """Map pairwise distances to D2D link costs.

    A distance falls in the first band whose upper edge exceeds it; the last
    band is closed on the right. Distances beyond ``range_m`` (or past the
    last band) get ``c_max``.
    """
    uppers = np.array([upper for upper, _ in cost_bands], dtype=float)
    costs = np.array([cost for _, cost in cost_bands], dtype=float)
    idx = np.searchsorted(uppers, distances, side="right")
    on_last_edge = (idx == len(uppers)) & np.isclose(distances, uppers[-1])
    idx = np.where(on_last_edge, len(uppers) - 1, idx)
    in_band = idx < len(uppers)
    result = np.where(in_band, costs[np.minimum(idx, len(uppers) - 1)], c_max)
    return np.where(distances <= range_m, result, c_max)


def build_network(
    positions: Sequence[Sequence[float]] | np.ndarray,
    range_m: float,
    cost_bands: Sequence[tuple[float, float]],
    bs_cost: float,
    *,
    catalog_size: int,
    capacities: int | Sequence[int],
    c_max: float | None = None,
) -> Network:
    """Build a Network from device coordinates (metres) and distance cost bands."""
    points = np.asarray(positions, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0 or points.shape[1] != 2:
        raise NetworkError("positions must be a non-empty list of 2-D points")
    if not cost_bands:
        raise NetworkError("at least one cost band is required")
    uppers = [upper for upper, _ in cost_bands]
    if any(b >= a for a, b in zip(uppers[1:], uppers[:-1])):
        raise NetworkError("cost bands must be sorted by strictly increasing distance")
    for upper, cost in cost_bands:
        if cost < 0 or bs_cost < 0:
            raise NetworkError("costs must be non-negative")
        if cost >= bs_cost:
            raise NetworkError(f"band cost {cost} (<{upper} m) must be below the BS cost {bs_cost}")
    if range_m < 0:
        raise NetworkError("range_m must be non-negative")

    device_count = points.shape[0]
    if isinstance(capacities, int):
        capacities = [capacities] * device_count
    sentinel = c_max if c_max is not None else 2.0 * bs_cost
    if sentinel <= bs_cost:
        raise NetworkError("c_max must exceed the BS cost")

    distances = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
    d2d = band_costs(distances, range_m, cost_bands, sentinel)
    np.fill_diagonal(d2d, 0.0)

    cost = np.zeros((device_count + 1, device_count + 1))
    cost[1:, 1:] = d2d
    cost[1:, 0] = bs_cost
    cost[0, 1:] = bs_cost
    return Network(
        cost=cost,
        capacities=np.asarray(capacities, dtype=int),
        catalog_size=catalog_size,
        c_max=sentinel,
        positions=points,
    )


def random_positions(device_count: int, cell_size_m: float, rng: np.random.Generator) -> np.ndarray:
    """Place devices uniformly at random in a square cell."""
    if device_count < 1:
        raise NetworkError("device_count must be positive")
    return rng.uniform(0.0, cell_size_m, size=(device_count, 2))
