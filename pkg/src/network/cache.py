"""Fractional cache configurations and the feasibility check for the set Y."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.network.topology import Network

# Slack for floating-point sums produced by projections.
FEASIBILITY_TOL = 1e-9


class CacheDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class CacheViolation:
    device: int
    constraint: str  # "box" or "capacity"
    detail: str


@dataclass
class CacheState:
    """Per-device fractional placement y^{i,n} (rows: devices, columns: files)."""

    y: np.ndarray

    def __post_init__(self) -> None:
        self.y = np.array(self.y, dtype=float)
        if self.y.ndim != 2:
            raise CacheDimensionError(f"cache matrix must be 2-D, got shape {self.y.shape}")

    @classmethod
    def empty(cls, net: Network) -> CacheState:
        return cls(np.zeros((net.device_count, net.catalog_size)))

    def copy(self) -> CacheState:
        return CacheState(self.y.copy())

    def total_allocation(self) -> np.ndarray:
        """Total fraction of each file cached across devices."""
        return self.y.sum(axis=0)


def validate_cache(
    cache: CacheState,
    net: Network,
    *,
    tol: float = FEASIBILITY_TOL,
) -> tuple[bool, list[CacheViolation]]:
    """Check box and per-device capacity constraints; returns (ok, violations)."""
    expected = (net.device_count, net.catalog_size)
    if cache.y.shape != expected:
        raise CacheDimensionError(f"cache shape {cache.y.shape} does not match network {expected}")

    violations: list[CacheViolation] = []
    for device, row in enumerate(cache.y):
        low, high = row.min(), row.max()
        if low < -tol or high > 1 + tol:
            violations.append(
                CacheViolation(device, "box", f"entries in [{low:.6g}, {high:.6g}] leave [0, 1]")
            )
        total = row.sum()
        capacity = net.capacities[device]
        if total > capacity + tol:
            violations.append(
                CacheViolation(device, "capacity", f"sum {total:.6g} exceeds C={capacity}")
            )
    return not violations, violations
