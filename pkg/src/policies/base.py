"""Common interface the harness uses to drive every caching policy."""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from src.network.requests import Request
from src.network.topology import Network


class CachingPolicy(ABC):
    name: str

    @abstractmethod
    def serve(self, req: Request, net: Network) -> float:
        """Serve ``req`` from the current caches, update them, return the slot cost."""
        ...

    @abstractmethod
    def allocation(self) -> np.ndarray:
        """Total fraction of each file cached across devices."""
        ...
