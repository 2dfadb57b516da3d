"""Best static cache configuration in hindsight.

The slot cost f_t(y) depends on the request only through (user, file), so a
trace collapses into request counts. Under a cost schedule the counts are
kept per cost epoch, each evaluated on the network of that epoch.

``best_static`` runs projected subgradient descent on the aggregate cost
F(y) and, with ``polish``, also solves the joint caching + routing LP with
HiGHS; the cheaper of the two configurations is returned.
"""

from __future__ import annotations

import bisect
import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from src.core.logging import get_logger
from src.data.schedules import CostSchedule, NetworkTimeline
from src.network.cache import CacheState
from src.network.requests import Trace
from src.network.topology import Network
from src.policies.projection import project_rows
from src.routing.greedy import greedy_fill, route_batch
from src.routing.oracle import OracleTooLargeError

logger = get_logger("hindsight")

# Subgradient progress is measured over windows of this many iterations.
CHECK_EVERY = 50
MAX_BRUTE_FORCE_DIMENSIONS = 6
MAX_BRUTE_FORCE_POINTS = 2_000_000


@dataclass(frozen=True)
class DemandBlock:
    start_slot: int
    counts: dict[tuple[int, int], int]


@dataclass(frozen=True)
class DemandProfile:
    """Request counts per (user, file), split by cost epoch when costs change."""

    blocks: tuple[DemandBlock, ...]
    schedule: CostSchedule | None = None

    @property
    def counts(self) -> dict[tuple[int, int], int]:
        total: Counter = Counter()
        for block in self.blocks:
            total.update(block.counts)
        return dict(total)

    @property
    def total(self) -> int:
        return sum(sum(block.counts.values()) for block in self.blocks)

    def __bool__(self) -> bool:
        return self.total > 0

    def scaled(self, factor: int) -> DemandProfile:
        blocks = tuple(
            DemandBlock(b.start_slot, {key: n * factor for key, n in b.counts.items()})
            for b in self.blocks
        )
        return DemandProfile(blocks, self.schedule)

    @classmethod
    def from_counts(cls, counts: dict[tuple[int, int], int]) -> DemandProfile:
        return cls((DemandBlock(1, dict(counts)),))


def aggregate(trace: Trace) -> DemandProfile:
    if not trace.requests:
        return DemandProfile((), trace.schedule)
    if trace.schedule is None or trace.schedule.is_empty:
        counts = Counter((req.user, req.file) for req in trace)
        return DemandProfile((DemandBlock(1, dict(counts)),))

    change_slots = trace.schedule.change_slots
    by_epoch: dict[int, Counter] = {}
    for req in trace:
        idx = bisect.bisect_right(change_slots, req.slot)
        epoch = change_slots[idx - 1] if idx else 1
        by_epoch.setdefault(epoch, Counter())[(req.user, req.file)] += 1
    blocks = tuple(DemandBlock(start, dict(c)) for start, c in sorted(by_epoch.items()))
    return DemandProfile(blocks, trace.schedule)


# ── Aggregate cost ──────────────────────────────────────────────


@dataclass(frozen=True)
class _Group:
    net: Network
    requester: int
    files: np.ndarray
    weights: np.ndarray


def _groups(profile: DemandProfile, net: Network) -> list[_Group]:
    timeline = NetworkTimeline(net, profile.schedule)
    groups = []
    for block in profile.blocks:
        block_net = timeline.network_at(block.start_slot)
        by_user: dict[int, list[tuple[int, int]]] = {}
        for (user, file), count in sorted(block.counts.items()):
            if count:
                by_user.setdefault(user, []).append((file, count))
        for user, items in by_user.items():
            files, weights = zip(*items)
            groups.append(
                _Group(block_net, user, np.asarray(files, dtype=int), np.asarray(weights, dtype=float))
            )
    return groups


def _evaluate(y: np.ndarray, groups: list[_Group], gradient: bool = True) -> tuple[float, np.ndarray | None]:
    total = 0.0
    grad = np.zeros_like(y) if gradient else None
    for g in groups:
        batch = route_batch(g.requester, g.files, y, g.net)
        total += float(g.weights @ batch.cost)
        if grad is not None:
            src = np.asarray(batch.sources, dtype=int)
            grad[np.ix_(src, g.files)] -= batch.beta * g.weights[None, :]
    return total, grad


def aggregate_cost(y: CacheState | np.ndarray, profile: DemandProfile, net: Network) -> float:
    """F(y): total trace cost had ``y`` been held fixed."""
    matrix = y.y if isinstance(y, CacheState) else np.asarray(y, dtype=float)
    return _evaluate(matrix, _groups(profile, net), gradient=False)[0]


# ── Solvers ─────────────────────────────────────────────────────


@dataclass(frozen=True)
class HindsightResult:
    cache: CacheState
    total_cost: float
    converged: bool
    iterations: int
    method: str

    @property
    def y(self) -> np.ndarray:
        return self.cache.y


def _uniform(net: Network) -> np.ndarray:
    return np.repeat((net.capacities / net.catalog_size)[:, None], net.catalog_size, axis=1)


def _subgradient_descent(
    groups: list[_Group],
    net: Network,
    max_iters: int,
    tol: float,
) -> tuple[np.ndarray, float, bool, int]:
    y = _uniform(net)
    capacities = net.capacities.astype(float)
    # Steps diam(Y)/sqrt(k) along the normalised subgradient.
    diameter = math.sqrt(2.0 * float(capacities.sum())) or 1.0

    best_y, best_f = y.copy(), math.inf
    window_start: float | None = None
    for k in range(1, max_iters + 1):
        f, grad = _evaluate(y, groups)
        if f < best_f:
            best_y, best_f = y.copy(), f
        norm = float(np.linalg.norm(grad))
        if norm == 0.0:
            return best_y, best_f, True, k
        if k % CHECK_EVERY == 0:
            # Relative improvement of the best value over the last window.
            if window_start is not None:
                if window_start - best_f <= tol * max(abs(window_start), 1.0):
                    return best_y, best_f, True, k
            window_start = best_f
        y = project_rows(y - (diameter / math.sqrt(k)) * grad / norm, capacities)
    return best_y, best_f, False, max_iters


def _solve_lp(groups: list[_Group], net: Network) -> np.ndarray | None:
    """Joint LP over cache fractions y and per-(user, file) routing shares z."""
    devices, files = net.device_count, net.catalog_size
    n_y = devices * files
    col = n_y
    objective = [0.0] * n_y
    eq_rows, eq_cols = [], []
    ub_rows, ub_cols, ub_vals = [], [], []
    ub_count = 0
    demand_count = 0

    for g in groups:
        sources = g.net.neighbourhood(g.requester)
        source_costs = [float(g.net.d2d_cost[g.requester, j]) for j in sources]
        bs_cost = float(g.net.bs_cost[g.requester])
        for file, weight in zip(g.files.tolist(), g.weights.tolist()):
            for j, c in zip(sources, source_costs):
                objective.append(weight * c)
                eq_rows.append(demand_count)
                eq_cols.append(col)
                # z_j <= y[j, file]
                ub_rows += [ub_count, ub_count]
                ub_cols += [col, j * files + file]
                ub_vals += [1.0, -1.0]
                ub_count += 1
                col += 1
            objective.append(weight * bs_cost)
            eq_rows.append(demand_count)
            eq_cols.append(col)
            col += 1
            demand_count += 1

    for i in range(devices):
        for n in range(files):
            ub_rows.append(ub_count)
            ub_cols.append(i * files + n)
            ub_vals.append(1.0)
        ub_count += 1

    a_ub = sparse.csr_matrix((ub_vals, (ub_rows, ub_cols)), shape=(ub_count, col))
    b_ub = np.concatenate([np.zeros(ub_count - devices), net.capacities.astype(float)])
    a_eq = sparse.csr_matrix((np.ones(len(eq_rows)), (eq_rows, eq_cols)), shape=(demand_count, col))
    b_eq = np.ones(demand_count)
    bounds = [(0.0, 1.0)] * n_y + [(0.0, None)] * (col - n_y)

    result = linprog(
        np.asarray(objective), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
        bounds=bounds, method="highs",
    )
    if result.status != 0:
        logger.warning("hindsight_lp_failed", status=result.status, message=result.message)
        return None
    y = np.clip(result.x[:n_y].reshape(devices, files), 0.0, 1.0)
    return project_rows(y, net.capacities.astype(float))


def best_static(
    profile: DemandProfile,
    net: Network,
    max_iters: int = 3000,
    tol: float = 1e-9,
    *,
    polish: bool = True,
) -> HindsightResult:
    """Minimise F(y) over the feasible caches; the best static caches are the arg min."""
    if not profile:
        raise ValueError("best_static needs a non-empty demand profile")
    groups = _groups(profile, net)

    y, total, converged, iterations = _subgradient_descent(groups, net, max_iters, tol)
    method = "subgradient"
    if not converged:
        logger.warning("hindsight_not_converged", iterations=iterations, total_cost=total)

    if polish:
        lp_y = _solve_lp(groups, net)
        if lp_y is not None:
            lp_total = _evaluate(lp_y, groups, gradient=False)[0]
            if lp_total <= total:
                y, total, method = lp_y, lp_total, "lp"
                converged = True

    logger.info("hindsight_solved", iterations=iterations, total_cost=total, method=method)
    return HindsightResult(CacheState(y), total, converged, iterations, method)


def _feasible_rows(files: int, capacity: int, grid: np.ndarray) -> np.ndarray:
    rows = np.array(list(itertools.product(grid, repeat=files)), dtype=float).reshape(-1, files)
    return rows[rows.sum(axis=1) <= capacity + 1e-9]


def brute_force_static(
    profile: DemandProfile,
    net: Network,
    grid_step: float = 0.05,
) -> tuple[CacheState, float]:
    """Exhaustive grid search over feasible caches; a test oracle for tiny instances."""
    dimensions = net.device_count * net.catalog_size
    if dimensions > MAX_BRUTE_FORCE_DIMENSIONS:
        raise OracleTooLargeError(
            f"brute force over {dimensions} cache entries exceeds {MAX_BRUTE_FORCE_DIMENSIONS}"
        )
    if not 0.0 < grid_step <= 1.0:
        raise ValueError(f"grid_step must be in (0, 1], got {grid_step}")

    grid = np.unique(np.clip(np.round(np.arange(0.0, 1.0 + grid_step / 2, grid_step), 12), 0.0, 1.0))
    if len(grid) ** net.catalog_size > MAX_BRUTE_FORCE_POINTS:
        raise OracleTooLargeError(f"grid step {grid_step} is too fine for {net.catalog_size} files")
    per_device = [_feasible_rows(net.catalog_size, int(c), grid) for c in net.capacities]
    points = math.prod(len(rows) for rows in per_device)
    if points > MAX_BRUTE_FORCE_POINTS:
        raise OracleTooLargeError(f"{points} grid points exceed {MAX_BRUTE_FORCE_POINTS}")

    index = np.stack(np.meshgrid(*[np.arange(len(r)) for r in per_device], indexing="ij"), -1)
    index = index.reshape(-1, net.device_count)
    configs = np.stack([per_device[i][index[:, i]] for i in range(net.device_count)], axis=1)

    totals = np.zeros(len(configs))
    for g in _groups(profile, net):
        src = np.asarray(g.net.neighbourhood(g.requester), dtype=int)
        source_costs = g.net.d2d_cost[g.requester, src]
        for file, weight in zip(g.files.tolist(), g.weights.tolist()):
            supplies = configs[:, src, file].T
            _, _, cost, _, _ = greedy_fill(source_costs, float(g.net.bs_cost[g.requester]), supplies)
            totals += weight * cost
    best = int(np.argmin(totals))
    return CacheState(configs[best].copy()), float(totals[best])


def hindsight_slot_costs(trace: Trace, y: CacheState | np.ndarray, net: Network) -> np.ndarray:
    """f_t(y*) for every slot, replaying the trace at the fixed configuration."""
    matrix = y.y if isinstance(y, CacheState) else np.asarray(y, dtype=float)
    timeline = NetworkTimeline(net, trace.schedule)
    costs = np.zeros(len(trace))
    batches: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for req in trace:
        batches.setdefault((timeline.epoch_of(req.slot), req.user), []).append((req.slot, req.file))
    for (epoch, user), items in batches.items():
        slots, files = (np.asarray(v, dtype=int) for v in zip(*items))
        batch = route_batch(user, files, matrix, timeline.network_at(epoch))
        costs[slots - 1] = batch.cost
    return costs
