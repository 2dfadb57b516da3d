"""Requests and request traces (one request per slot)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, Sequence

if TYPE_CHECKING:
    from src.data.schedules import CostSchedule
    from src.network.topology import Network


class TraceError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Request:
    slot: int
    user: int
    file: int


@dataclass(frozen=True)
class Trace:
    requests: tuple[Request, ...]
    schedule: CostSchedule | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "requests", tuple(self.requests))
        for expected, req in enumerate(self.requests, start=1):
            if req.slot != expected:
                raise TraceError(f"slot {req.slot} found where slot {expected} was expected")

    @classmethod
    def from_pairs(
        cls,
        pairs: Sequence[tuple[int, int]],
        schedule: CostSchedule | None = None,
    ) -> Trace:
        """Number (user, file) pairs as slots 1..T."""
        requests = tuple(Request(t, user, file) for t, (user, file) in enumerate(pairs, start=1))
        return cls(requests, schedule)

    def __len__(self) -> int:
        return len(self.requests)

    def __iter__(self) -> Iterator[Request]:
        return iter(self.requests)

    @property
    def horizon(self) -> int:
        return len(self.requests)

    def prefix(self, horizon: int) -> Trace:
        return Trace(self.requests[:horizon], self.schedule)

    def check_against(self, net: Network) -> None:
        """Raise TraceError if a request names a device or file the network lacks."""
        for req in self.requests:
            if not 0 <= req.user < net.device_count:
                raise TraceError(f"slot {req.slot}: user {req.user} outside 0..{net.device_count - 1}")
            if not 0 <= req.file < net.catalog_size:
                raise TraceError(f"slot {req.slot}: file {req.file} outside 0..{net.catalog_size - 1}")
