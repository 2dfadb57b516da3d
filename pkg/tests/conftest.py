"""Shared test fixtures for the d2dcache test suite."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import pytest

from src.core.models import ExperimentConfig, NetworkSection, PolicyKind, PolicySpec
from src.network.topology import Network, build_network, random_positions

DEFAULT_BANDS = [(100.0, 2.0), (300.0, 5.0), (400.0, 7.0), (500.0, 9.0)]
SEVERED = 20.0


def make_network(
    d2d: Sequence[Sequence[float]],
    *,
    bs_cost: float | Sequence[float] = 10.0,
    capacities: int | Sequence[int] = 1,
    catalog_size: int = 3,
    c_max: float = SEVERED,
) -> Network:
    """Network from an explicit device-to-device cost matrix (c_max marks absent links)."""
    d2d = np.asarray(d2d, dtype=float)
    devices = d2d.shape[0]
    bs = np.broadcast_to(np.asarray(bs_cost, dtype=float), (devices,))
    cost = np.zeros((devices + 1, devices + 1))
    cost[1:, 1:] = d2d
    cost[1:, 0] = bs
    cost[0, 1:] = bs
    if isinstance(capacities, int):
        capacities = [capacities] * devices
    return Network(cost=cost, capacities=np.asarray(capacities), catalog_size=catalog_size, c_max=c_max)


@pytest.fixture
def network_factory() -> Callable[..., Network]:
    return make_network


# ── Sample networks ─────────────────────────────────────────────


@pytest.fixture
def star_net() -> Network:
    """Device 0 reaches device 1 at cost 2 and device 2 at cost 5; 1 and 2 are out of range."""
    return make_network(
        [[0.0, 2.0, 5.0], [2.0, 0.0, SEVERED], [5.0, SEVERED, 0.0]],
        capacities=2,
        catalog_size=3,
    )


@pytest.fixture
def lonely_net() -> Network:
    """One device, no D2D links, C=1, N=2."""
    return make_network([[0.0]], capacities=1, catalog_size=2)


@pytest.fixture
def reference_net() -> Network:
    positions = random_positions(8, 1500.0, np.random.default_rng(42))
    return build_network(
        positions, 500.0, DEFAULT_BANDS, 10.0, catalog_size=100, capacities=6
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


# ── Experiment configs ──────────────────────────────────────────


@pytest.fixture
def small_config() -> ExperimentConfig:
    """Fast experiment: 4 clustered devices, 20 files, 300 slots."""
    return ExperimentConfig(
        seed=7,
        horizon=300,
        catalog_size=20,
        network=NetworkSection(
            device_count=4,
            positions=[(0.0, 0.0), (80.0, 0.0), (0.0, 250.0), (350.0, 350.0)],
            capacities=3,
        ),
        policies=[
            PolicySpec(kind=PolicyKind.DOCP),
            PolicySpec(kind=PolicyKind.MLRU),
            PolicySpec(kind=PolicyKind.LAZY_LRU),
        ],
    )
