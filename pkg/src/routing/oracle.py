"""Independent LP solution of the slot routing problem, used to check the greedy form."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from src.core.config import get_settings
from src.network.cache import CacheState
from src.network.requests import Request
from src.network.topology import BS, Network
from src.routing.greedy import RoutingPlan


class OracleTooLargeError(ValueError):
    pass


def lp_oracle_routing(
    req: Request,
    y: CacheState | np.ndarray,
    net: Network,
    *,
    max_sources: int | None = None,
) -> RoutingPlan:
    """Solve min sum_j c_j z_j s.t. sum_j z_j = 1, z_j <= y^{j,n} with HiGHS.

    Cache caps are passed as inequality rows (not bounds) so their dual
    values come back as beta*. The BS column carries no cap.
    """
    limit = max_sources if max_sources is not None else get_settings().lp_oracle_max_sources
    matrix = y.y if isinstance(y, CacheState) else np.asarray(y)
    sources = net.neighbourhood(req.user)
    if len(sources) + 1 > limit:
        raise OracleTooLargeError(
            f"{len(sources) + 1} sources exceed the oracle limit of {limit}"
        )

    k = len(sources)
    c = np.append(net.d2d_cost[req.user, list(sources)], net.bs_cost[req.user])
    a_ub = np.hstack([np.eye(k), np.zeros((k, 1))])
    b_ub = np.clip(matrix[list(sources), req.file], 0.0, None)
    a_eq = np.ones((1, k + 1))
    result = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=[(0.0, None)] * (k + 1),
        method="highs",
    )
    if not result.success:
        raise RuntimeError(f"routing LP failed: {result.message}")

    shares = {j: float(result.x[idx]) for idx, j in enumerate(sources)}
    shares[BS] = float(result.x[k])
    return RoutingPlan(
        shares=shares,
        cost=float(result.fun),
        dual_alpha=float(result.eqlin.marginals[0]),
        dual_beta={j: float(-result.ineqlin.marginals[idx]) for idx, j in enumerate(sources)},
    )
