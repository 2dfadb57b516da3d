"""Closed-form solution of the per-slot routing LP and its dual certificate.

For a request (i_t, n_t) the LP is a fractional knapsack: fill the demand
from the cheapest sources in J(i_t) (the requester itself first, at cost 0),
each capped by its cached fraction y^{j,n_t}, and let the BS absorb what is
left. The marginal source fixes alpha*; every D2D source j gets
beta*_j = max(alpha* - c_{i_t j}, 0), and -beta* is a subgradient of the
slot cost with respect to y.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from src.network.cache import CacheState
from src.network.requests import Request
from src.network.topology import BS, Network

# Cumulative supply within this distance of 1 counts as meeting the demand.
DEMAND_TOL = 1e-12


@dataclass(frozen=True)
class RoutingPlan:
    shares: dict[int, float]
    cost: float
    dual_alpha: float
    dual_beta: dict[int, float] = field(default_factory=dict)

    @property
    def bs_share(self) -> float:
        return self.shares.get(BS, 0.0)


@dataclass(frozen=True)
class SparseGradient:
    """g_t(y_t): nonzero only at (j, n_t) for D2D sources j of the requester."""

    entries: dict[tuple[int, int], float]


@dataclass(frozen=True)
class BatchRouting:
    """Greedy routing of one requester's demand for several files at once.

    Arrays are indexed (source, file) following ``sources`` order.
    """

    sources: tuple[int, ...]
    shares: np.ndarray
    bs_share: np.ndarray
    cost: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray


def greedy_fill(
    source_costs: np.ndarray,
    bs_cost: float,
    supplies: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Fill unit demand from sources sorted by ascending cost.

    ``supplies`` has the source axis first (never empty: a device is always
    its own source); any trailing axes are batch axes.
    Returns (shares, bs_share, cost, alpha, beta).
    """
    supplies = np.clip(supplies, 0.0, None)
    costs = source_costs.reshape((-1,) + (1,) * (supplies.ndim - 1))

    cumulative = np.cumsum(supplies, axis=0)
    before = cumulative - supplies
    shares = np.minimum(supplies, np.clip(1.0 - before, 0.0, None))
    bs_share = np.clip(1.0 - cumulative[-1], 0.0, None)
    cost = (costs * shares).sum(axis=0) + bs_cost * bs_share

    reached = cumulative >= 1.0 - DEMAND_TOL
    marginal = np.argmax(reached, axis=0)
    alpha = np.where(reached.any(axis=0), source_costs[marginal], bs_cost)
    beta = np.clip(alpha[None, ...] - costs, 0.0, None)
    return shares, bs_share, cost, alpha, beta


def _as_matrix(y: CacheState | np.ndarray) -> np.ndarray:
    return y.y if isinstance(y, CacheState) else np.asarray(y)


def route_batch(
    requester: int,
    files: Sequence[int] | np.ndarray,
    y: CacheState | np.ndarray,
    net: Network,
) -> BatchRouting:
    """Optimal routing of ``requester``'s requests for each of ``files``."""
    matrix = _as_matrix(y)
    files = np.asarray(files, dtype=int)
    sources = net.neighbourhood(requester)
    src = np.asarray(sources, dtype=int)
    source_costs = net.d2d_cost[requester, src]
    supplies = matrix[np.ix_(src, files)]
    shares, bs_share, cost, alpha, beta = greedy_fill(
        source_costs, float(net.bs_cost[requester]), supplies
    )
    return BatchRouting(sources, shares, bs_share, cost, alpha, beta)


def optimal_routing(req: Request, y: CacheState | np.ndarray, net: Network) -> RoutingPlan:
    """Solve the slot routing problem for ``req`` in closed greedy form."""
    batch = route_batch(req.user, [req.file], y, net)
    shares = {j: float(batch.shares[k, 0]) for k, j in enumerate(batch.sources)}
    shares[BS] = float(batch.bs_share[0])
    return RoutingPlan(
        shares=shares,
        cost=float(batch.cost[0]),
        dual_alpha=float(batch.alpha[0]),
        dual_beta={j: float(batch.beta[k, 0]) for k, j in enumerate(batch.sources)},
    )


def service_cost(req: Request, y: CacheState | np.ndarray, net: Network) -> float:
    return optimal_routing(req, y, net).cost


def subgradient(req: Request, y: CacheState | np.ndarray, net: Network) -> SparseGradient:
    plan = optimal_routing(req, y, net)
    return gradient_from_plan(req, plan)


def gradient_from_plan(req: Request, plan: RoutingPlan) -> SparseGradient:
    return SparseGradient(
        {(j, req.file): -beta for j, beta in plan.dual_beta.items() if beta > 0.0}
    )
