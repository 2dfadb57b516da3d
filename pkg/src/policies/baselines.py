"""Reactive whole-file baselines: LRU, LFU, mLRU and lazy LRU.

Caches are per-device lists ordered most-recent-first. A request is served
from the cheapest source in the requester's neighbourhood holding the whole
file, else from the BS, which equals the fractional routing cost on the
induced 0/1 configuration.

  LRU      requester inserts n_t at the front, evicting its tail when full.
  LFU      requester counts n_t and keeps its top-C files by (count, recency).
  mLRU     a hit refreshes n_t in the serving cache ("one") or in every
           neighbourhood cache holding it ("all"); a miss inserts at the
           requester.
  lazyLRU  only a neighbourhood-wide miss changes anything: insert at the
           requester.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from src.core.models import MlruVariant, PolicyKind
from src.network.cache import CacheState
from src.network.requests import Request
from src.network.topology import BS, Network
from src.policies.base import CachingPolicy


class UnknownPolicyError(ValueError):
    pass


@dataclass
class ReactiveState:
    lists: list[list[int]]
    counts: list[Counter] = field(default_factory=list)
    last_seen: list[dict[int, int]] = field(default_factory=list)

    @classmethod
    def empty(cls, device_count: int) -> ReactiveState:
        return cls(
            lists=[[] for _ in range(device_count)],
            counts=[Counter() for _ in range(device_count)],
            last_seen=[{} for _ in range(device_count)],
        )

    def copy(self) -> ReactiveState:
        return ReactiveState(
            lists=[list(items) for items in self.lists],
            counts=[Counter(c) for c in self.counts],
            last_seen=[dict(s) for s in self.last_seen],
        )

    def holds(self, device: int, file: int) -> bool:
        return file in self.lists[device]

    def to_cache_state(self, net: Network) -> CacheState:
        """The 0/1 configuration these lists induce (a point of Y)."""
        y = np.zeros((net.device_count, net.catalog_size))
        for device, items in enumerate(self.lists):
            y[device, items] = 1.0
        return CacheState(y)


def reactive_route(req: Request, state: ReactiveState, net: Network) -> tuple[float, int]:
    """Cheapest whole-file source for ``req``: (cost, source id, BS = -1)."""
    for j in net.neighbourhood(req.user):
        if state.holds(j, req.file):
            return float(net.d2d_cost[req.user, j]), j
    return float(net.bs_cost[req.user]), BS


def _insert_lru(items: list[int], file: int, capacity: int) -> None:
    if capacity <= 0:
        return
    if file in items:
        items.remove(file)
    elif len(items) >= capacity:
        items.pop()
    items.insert(0, file)


def _refresh(items: list[int], file: int) -> None:
    items.remove(file)
    items.insert(0, file)


def _update_lfu(state: ReactiveState, device: int, req: Request, capacity: int) -> None:
    counts, last_seen, items = state.counts[device], state.last_seen[device], state.lists[device]
    counts[req.file] += 1
    last_seen[req.file] = req.slot
    if capacity <= 0:
        return
    candidates = set(items) | {req.file}
    keep = sorted(candidates, key=lambda n: (-counts[n], -last_seen.get(n, 0)))[:capacity]
    # Stored most-recent-first like every other list.
    state.lists[device] = sorted(keep, key=lambda n: -last_seen.get(n, 0))


def baseline_update(
    kind: PolicyKind,
    state: ReactiveState,
    req: Request,
    net: Network,
    *,
    mlru_variant: MlruVariant = MlruVariant.ONE,
) -> ReactiveState:
    """Return the state after ``kind`` reacts to ``req``; ``state`` is not modified."""
    new = state.copy()
    capacity = int(net.capacities[req.user])
    match kind:
        case PolicyKind.LRU:
            _insert_lru(new.lists[req.user], req.file, capacity)
        case PolicyKind.LFU:
            _update_lfu(new, req.user, req, capacity)
        case PolicyKind.MLRU:
            holders = [j for j in net.neighbourhood(req.user) if new.holds(j, req.file)]
            if not holders:
                _insert_lru(new.lists[req.user], req.file, capacity)
            elif mlru_variant is MlruVariant.ONE:
                # Neighbourhood order is cheapest first, so holders[0] served the request.
                _refresh(new.lists[holders[0]], req.file)
            else:
                for j in holders:
                    _refresh(new.lists[j], req.file)
        case PolicyKind.LAZY_LRU:
            if not any(new.holds(j, req.file) for j in net.neighbourhood(req.user)):
                _insert_lru(new.lists[req.user], req.file, capacity)
        case _:
            raise UnknownPolicyError(f"{kind!r} is not a reactive baseline")
    return new


# ── Harness adapter ─────────────────────────────────────────────


@dataclass
class ReactivePolicy(CachingPolicy):
    kind: PolicyKind
    state: ReactiveState
    catalog_size: int
    name: str = ""
    mlru_variant: MlruVariant = MlruVariant.ONE

    def __post_init__(self) -> None:
        if self.kind is PolicyKind.DOCP:
            raise UnknownPolicyError("docp is not a reactive baseline")
        if not self.name:
            self.name = self.kind.value

    def serve(self, req: Request, net: Network) -> float:
        cost, _ = reactive_route(req, self.state, net)
        self.state = baseline_update(
            self.kind, self.state, req, net, mlru_variant=self.mlru_variant
        )
        return cost

    def allocation(self) -> np.ndarray:
        totals = np.zeros(self.catalog_size)
        for items in self.state.lists:
            totals[items] += 1.0
        return totals
