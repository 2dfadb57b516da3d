"""Slot-specific link costs: explicit overrides and device mobility scripts.

An override ``(slot, i, j, cost)`` sets the symmetric D2D cost of the pair
from ``slot`` on, until a later override of the same pair. ``cost=None``
severs the link by setting the ``c_max`` sentinel; any live cost must stay
below both devices' BS costs. A mobility script moves devices at given
slots and the D2D costs are re-banded from the new distances.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from src.network.topology import Network, band_costs


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class CostOverride:
    slot: int
    i: int
    j: int
    cost: float | None  # None = sever (c_max sentinel)


@dataclass(frozen=True)
class MobilityScript:
    range_m: float
    cost_bands: tuple[tuple[float, float], ...]
    moves: tuple[tuple[int, int, float, float], ...]  # (slot, device, x, y)

    def positions_at(self, t: int, base: np.ndarray) -> np.ndarray:
        positions = np.array(base, dtype=float)
        for slot, device, x, y in self.moves:
            if slot <= t:
                positions[device] = (x, y)
        return positions


@dataclass(frozen=True)
class CostSchedule:
    overrides: tuple[CostOverride, ...] = ()
    mobility: MobilityScript | None = None
    _slots: tuple[int, ...] = field(init=False, repr=False, default=())

    def __post_init__(self) -> None:
        overrides = tuple(sorted(self.overrides, key=lambda o: o.slot))
        object.__setattr__(self, "overrides", overrides)
        slots = {o.slot for o in overrides}
        if self.mobility is not None:
            slots |= {move[0] for move in self.mobility.moves}
        object.__setattr__(self, "_slots", tuple(sorted(slots)))

    @property
    def change_slots(self) -> tuple[int, ...]:
        """Slots at which the cost matrix may change."""
        return self._slots

    @property
    def is_empty(self) -> bool:
        return not self._slots

    def check_against(self, net: Network) -> None:
        for o in self.overrides:
            if o.slot < 1:
                raise ScheduleError(f"override slot {o.slot} must be >= 1")
            for device in (o.i, o.j):
                if not 0 <= device < net.device_count:
                    raise ScheduleError(f"override names unknown device {device}")
            if o.i == o.j:
                raise ScheduleError("a device's link to itself cannot be overridden")
            _live_cost(net, o)
        if self.mobility is not None:
            if net.positions is None:
                raise ScheduleError("mobility scripts need a network built from positions")
            for slot, device, _, _ in self.mobility.moves:
                if not 0 <= device < net.device_count:
                    raise ScheduleError(f"slot {slot}: mobility moves unknown device {device}")


def _live_cost(net: Network, o: CostOverride) -> float:
    if o.cost is None or o.cost == net.c_max:
        return net.c_max
    limit = min(net.bs_cost[o.i], net.bs_cost[o.j])
    if o.cost < 0 or o.cost >= limit:
        raise ScheduleError(
            f"slot {o.slot}: cost {o.cost} on live link ({o.i}, {o.j}) must be in "
            f"[0, {limit}) or be the c_max sentinel"
        )
    return float(o.cost)


def apply_cost_schedule(net: Network, schedule: CostSchedule | None, t: int) -> Network:
    """The network as it stands at slot ``t``."""
    if schedule is None or schedule.is_empty or t < schedule.change_slots[0]:
        return net

    cost = np.array(net.cost)
    if schedule.mobility is not None:
        if net.positions is None:
            raise ScheduleError("mobility scripts need a network built from positions")
        positions = schedule.mobility.positions_at(t, net.positions)
        distances = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
        d2d = band_costs(distances, schedule.mobility.range_m, schedule.mobility.cost_bands, net.c_max)
        np.fill_diagonal(d2d, 0.0)
        cost[1:, 1:] = d2d

    for o in schedule.overrides:
        if o.slot > t:
            break
        value = _live_cost(net, o)
        cost[o.i + 1, o.j + 1] = value
        cost[o.j + 1, o.i + 1] = value
    return net.with_costs(cost)


class NetworkTimeline:
    """Per-slot networks for one run, rebuilt only when the schedule changes."""

    def __init__(self, net: Network, schedule: CostSchedule | None = None) -> None:
        self._net = net
        self._schedule = schedule
        self._slots: Sequence[int] = schedule.change_slots if schedule is not None else ()
        self._cache: dict[int, Network] = {0: net}

    def epoch_of(self, t: int) -> int:
        """Start slot of the cost epoch containing ``t`` (0 before any change)."""
        idx = bisect.bisect_right(self._slots, t)
        return self._slots[idx - 1] if idx else 0

    def network_at(self, t: int) -> Network:
        epoch = self.epoch_of(t)
        if epoch not in self._cache:
            self._cache[epoch] = apply_cost_schedule(self._net, self._schedule, epoch)
        return self._cache[epoch]
