"""Distributed Online Caching Policy (DOCP).

Every slot the requester routes its request over the current caches, then
sends each D2D source j in its neighbourhood the multiplier beta*_j. Each
recipient raises its fraction of the requested file by gamma * beta*_j and
projects its own cache row back onto {[0,1]^N, sum <= C_j}. Nothing outside
the requester's neighbourhood changes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from src.core.logging import get_logger
from src.core.models import InitialCache, StepSchedule
from src.network.cache import CacheState, validate_cache
from src.network.requests import Request
from src.network.topology import Network
from src.policies.base import CachingPolicy
from src.policies.projection import project_capped_box
from src.routing.greedy import RoutingPlan, optimal_routing

logger = get_logger("docp")

# Tolerance of the locality audit when comparing cache rows.
AUDIT_TOL = 1e-9


class StepSizeError(ValueError):
    pass


class InfeasibleCacheError(RuntimeError):
    pass


@dataclass(frozen=True)
class StepParams:
    """Regret-bound parameters: C = max C_i, J* = max |J(i)|, c* = max c_i0."""

    capacity: float
    j_star: int
    c_star: float
    horizon: int | None = None

    @classmethod
    def from_network(cls, net: Network, horizon: int | None = None) -> StepParams:
        return cls(
            capacity=float(net.max_capacity),
            j_star=net.j_star,
            c_star=net.c_star,
            horizon=horizon,
        )


@dataclass(frozen=True)
class MultiplierMessage:
    slot: int
    sender: int
    recipient: int
    file: int
    beta: float

    def to_record(self) -> dict:
        return {
            "slot": self.slot,
            "from": self.sender,
            "to": self.recipient,
            "file": self.file,
            "beta": self.beta,
        }


@dataclass(frozen=True)
class DocpState:
    cache: CacheState
    step_schedule: StepSchedule
    params: StepParams
    t: int = 1
    gamma_override: float | None = None


@dataclass(frozen=True)
class DocpStepResult:
    cost: float
    plan: RoutingPlan
    messages: list[MultiplierMessage]
    state: DocpState


def step_size(state: DocpState) -> float:
    if state.gamma_override is not None:
        return state.gamma_override

    params = state.params
    numerator = math.sqrt(2.0 * params.capacity * params.j_star)
    match state.step_schedule:
        case StepSchedule.CONSTANT_T:
            if params.horizon is None:
                raise StepSizeError("constant_T step size needs the horizon T")
            horizon = params.horizon
        case StepSchedule.INVERSE_SQRT_T:
            horizon = state.t
        case StepSchedule.DOUBLING:
            # Epoch k covers slots [2^k, 2^(k+1)) and is tuned for T = 2^k.
            horizon = 1 << (state.t.bit_length() - 1)
        case _:
            raise StepSizeError(f"unknown step schedule {state.step_schedule!r}")
    return numerator / (params.c_star * math.sqrt(horizon))


def initial_cache(
    net: Network,
    kind: InitialCache = InitialCache.UNIFORM,
    rng: np.random.Generator | None = None,
) -> CacheState:
    shape = (net.device_count, net.catalog_size)
    match kind:
        case InitialCache.UNIFORM:
            y = np.repeat((net.capacities / net.catalog_size)[:, None], net.catalog_size, axis=1)
        case InitialCache.ZEROS:
            y = np.zeros(shape)
        case InitialCache.RANDOM:
            rng = rng if rng is not None else np.random.default_rng()
            raw = rng.uniform(0.0, 1.0, size=shape)
            y = np.vstack(
                [project_capped_box(row, float(c)).y for row, c in zip(raw, net.capacities)]
            )
        case _:
            raise ValueError(f"unknown initial cache kind {kind!r}")
    return CacheState(y)


def docp_step(state: DocpState, req: Request, net: Network) -> DocpStepResult:
    """One slot of DOCP: route on the current caches, then update neighbours."""
    if req.slot != state.t:
        raise ValueError(f"request for slot {req.slot} given to a policy at slot {state.t}")
    ok, violations = validate_cache(state.cache, net)
    if not ok:
        raise InfeasibleCacheError(f"slot {req.slot}: cache left Y: {violations}")

    # Cost is accrued on the pre-update configuration.
    plan = optimal_routing(req, state.cache, net)
    gamma = step_size(state)

    y = state.cache.y.copy()
    messages: list[MultiplierMessage] = []
    for j, beta in plan.dual_beta.items():
        if beta <= 0.0:
            continue
        messages.append(MultiplierMessage(req.slot, req.user, j, req.file, beta))
        row = y[j].copy()
        row[req.file] += gamma * beta
        y[j] = project_capped_box(row, float(net.capacities[j])).y

    logger.debug(
        "docp_step",
        slot=req.slot,
        user=req.user,
        file=req.file,
        cost=plan.cost,
        gamma=gamma,
        messages=len(messages),
    )
    new_state = replace(state, cache=CacheState(y), t=state.t + 1)
    return DocpStepResult(plan.cost, plan, messages, new_state)


def _row_is_shift(before: np.ndarray, after: np.ndarray, tol: float) -> bool:
    """True if after == clip(before - theta, 0, 1) for a single theta >= 0."""
    if np.any(after > before + tol):
        return False
    dropped = before - after
    inner = after > tol
    thetas = dropped[inner]
    if thetas.size and np.ptp(thetas) > tol:
        return False
    theta = float(thetas.max()) if thetas.size else float(dropped.max(initial=0.0))
    # Entries clipped to zero must not have exceeded the common shift.
    return bool(np.all(before[~inner] <= theta + tol))


def locality_audit(
    messages: Iterable[MultiplierMessage],
    net: Network,
    req: Request,
    before: CacheState | None = None,
    after: CacheState | None = None,
    *,
    tol: float = AUDIT_TOL,
) -> bool:
    """Check that a DOCP slot only talked to, and only changed, the requester's neighbourhood.

    Messages must come from the requester, concern the requested file and go
    to members of J(i_t). With both cache snapshots given, rows outside
    J(i_t) must be unchanged; inside it the requested file may only grow and
    every other file may only drop by the row's common projection shift.
    """
    neighbourhood = set(net.neighbourhood(req.user))
    for msg in messages:
        if msg.sender != req.user or msg.file != req.file or msg.recipient not in neighbourhood:
            return False
    if before is None or after is None:
        return True

    others = np.ones(net.catalog_size, dtype=bool)
    others[req.file] = False
    for device in range(net.device_count):
        old, new = before.y[device], after.y[device]
        if device not in neighbourhood:
            if not np.allclose(old, new, rtol=0.0, atol=tol):
                return False
            continue
        if new[req.file] < old[req.file] - tol:
            return False
        if not _row_is_shift(old[others], new[others], tol):
            return False
    return True


# ── Harness adapter ─────────────────────────────────────────────


@dataclass
class DocpPolicy(CachingPolicy):
    state: DocpState
    name: str = "docp"
    audit: bool = False
    on_messages: Callable[[list[MultiplierMessage]], None] | None = None
    audit_failures: list[int] = field(default_factory=list)

    def serve(self, req: Request, net: Network) -> float:
        result = docp_step(self.state, req, net)
        if self.audit and not locality_audit(
            result.messages, net, req, self.state.cache, result.state.cache
        ):
            logger.warning("locality_audit_failed", slot=req.slot, user=req.user, file=req.file)
            self.audit_failures.append(req.slot)
        if self.on_messages is not None and result.messages:
            self.on_messages(result.messages)
        self.state = result.state
        return result.cost

    def allocation(self) -> np.ndarray:
        return self.state.cache.total_allocation()


class MessageLog:
    """JSON-lines sink for multiplier messages, one object per message."""

    def __init__(self, path: str | Path) -> None:
        self._path = Path(path)
        self._handle = self._path.open("w", encoding="utf-8")

    def __call__(self, messages: list[MultiplierMessage]) -> None:
        for msg in messages:
            self._handle.write(json.dumps(msg.to_record()) + "\n")

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> MessageLog:
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
