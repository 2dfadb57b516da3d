"""Request trace generators.

Each generator turns a GeneratorSpec into a Trace for a given network.
Draws are made slot by slot from one ``default_rng(seed)`` stream, so a
shorter horizon with the same seed yields a prefix of the longer trace.
Zipf rank r (1-based) maps to file r - 1 unless a permutation is active.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from src.core.logging import get_logger
from src.core.models import GeneratorKind, GeneratorSpec
from src.data.trace_io import read_trace
from src.network.requests import Request, Trace, TraceError
from src.network.topology import Network

logger = get_logger("workload")


def zipf_probabilities(catalog_size: int, exponent: float) -> np.ndarray:
    """p_k proportional to k^-s over ranks 1..N."""
    if catalog_size < 1:
        raise ValueError("catalog_size must be positive")
    if exponent <= 0:
        raise ValueError(f"zipf exponent must be positive, got {exponent}")
    weights = np.arange(1, catalog_size + 1, dtype=float) ** -exponent
    return weights / weights.sum()


def sample_categorical(probabilities: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling of category indices from uniforms in [0, 1)."""
    cdf = np.cumsum(probabilities)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, uniforms, side="right")


def _user_probabilities(spec: GeneratorSpec, net: Network) -> np.ndarray:
    if spec.user_weights is None:
        return np.full(net.device_count, 1.0 / net.device_count)
    if len(spec.user_weights) != net.device_count:
        raise ValueError(
            f"{len(spec.user_weights)} user weights given for {net.device_count} devices"
        )
    return np.asarray(spec.user_weights, dtype=float)


def _to_trace(users: np.ndarray, files: np.ndarray) -> Trace:
    return Trace(
        tuple(
            Request(t, int(u), int(n))
            for t, (u, n) in enumerate(zip(users.tolist(), files.tolist()), start=1)
        )
    )


class TraceGenerator(ABC):
    kind: GeneratorKind

    @abstractmethod
    def generate(
        self,
        spec: GeneratorSpec,
        net: Network,
        probe: Optional[np.ndarray] = None,
    ) -> Trace: ...


class ZipfIidGenerator(TraceGenerator):
    """Users from the user distribution, files i.i.d. Zipf(s)."""

    kind = GeneratorKind.ZIPF_IID

    def generate(self, spec, net, probe=None) -> Trace:
        rng = np.random.default_rng(spec.seed)
        draws = rng.random((spec.horizon, 2))
        users = sample_categorical(_user_probabilities(spec, net), draws[:, 0])
        ranks = sample_categorical(zipf_probabilities(net.catalog_size, spec.zipf_exponent), draws[:, 1])
        return _to_trace(users, ranks)


class ShiftingZipfGenerator(TraceGenerator):
    """Zipf requests whose rank-to-file map is reshuffled every ``shift_period`` slots.

    The first period uses the identity map. Permutations come from their own
    stream so they do not disturb the per-slot draws.
    """

    kind = GeneratorKind.SHIFTING_ZIPF

    def generate(self, spec, net, probe=None) -> Trace:
        rng = np.random.default_rng(spec.seed)
        perm_rng = np.random.default_rng([spec.seed, 1])
        draws = rng.random((spec.horizon, 2))
        users = sample_categorical(_user_probabilities(spec, net), draws[:, 0])
        ranks = sample_categorical(zipf_probabilities(net.catalog_size, spec.zipf_exponent), draws[:, 1])

        periods = -(-spec.horizon // spec.shift_period)
        perms = [np.arange(net.catalog_size)]
        perms += [perm_rng.permutation(net.catalog_size) for _ in range(periods - 1)]
        period_of_slot = np.arange(spec.horizon) // spec.shift_period
        files = np.stack(perms)[period_of_slot, ranks]
        return _to_trace(users, files)


class AdversarialCyclicGenerator(TraceGenerator):
    """Sweep the catalog least-cached-first at a rotating user.

    ``probe`` is the total allocation of the policy's initial state (one
    value per file); without it every file counts as equally cached.
    """

    kind = GeneratorKind.ADVERSARIAL_CYCLIC

    def generate(self, spec, net, probe=None) -> Trace:
        allocation = np.zeros(net.catalog_size) if probe is None else np.asarray(probe, dtype=float)
        if allocation.shape != (net.catalog_size,):
            raise ValueError(f"probe must have one entry per file, got shape {allocation.shape}")
        order = np.argsort(allocation, kind="stable")
        slots = np.arange(spec.horizon)
        users = slots % net.device_count
        files = order[slots % net.catalog_size]
        return _to_trace(users, files)


class ReplayGenerator(TraceGenerator):
    """Replay a trace file, truncated to the horizon."""

    kind = GeneratorKind.REPLAY

    def generate(self, spec, net, probe=None) -> Trace:
        if not spec.trace_path:
            raise TraceError("replay workloads need trace_path")
        trace = read_trace(spec.trace_path)
        trace.check_against(net)
        if len(trace) < spec.horizon:
            logger.info("replay_trace_shorter", path=spec.trace_path, length=len(trace), horizon=spec.horizon)
        return trace.prefix(spec.horizon)


GENERATORS: dict[GeneratorKind, TraceGenerator] = {
    g.kind: g
    for g in (ZipfIidGenerator(), ShiftingZipfGenerator(), AdversarialCyclicGenerator(), ReplayGenerator())
}


def generate_trace(
    spec: GeneratorSpec,
    net: Network,
    probe: Optional[np.ndarray] = None,
) -> Trace:
    generator = GENERATORS[GeneratorKind(spec.kind)]
    trace = generator.generate(spec, net, probe)
    logger.debug("trace_generated", kind=generator.kind.value, seed=spec.seed, horizon=len(trace))
    return trace
