"""Node and snapshot types plus the closed-form delay arithmetic.

Units are SI throughout: seconds, bits per second, bits.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ATOL = 1e-9


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NodeTier(str, enum.Enum):
    CLOUD = "cloud"
    FOG = "fog"


class Strategy(str, enum.Enum):
    EQ = "Eq"
    RB = "Rb"
    OPT = "Opt"
    SINGLE = "Single"


def service_delay(mean_service_time_s: float, load: float) -> float:
    """Mean M/M/1 sojourn time ``t_s / (1 - load)``."""
    if not (0.0 <= load < 1.0):
        raise DomainError(f"load outside [0,1): {load!r}")
    if not mean_service_time_s > 0.0:
        raise DomainError(f"mean service time must be positive: {mean_service_time_s!r}")
    return mean_service_time_s / (1.0 - load)


@dataclass(frozen=True)
class NodeSpec:
    tier: NodeTier
    rate_bps: float
    link_delay_s: float
    mean_service_time_s: float
    load: float

    def __post_init__(self):
        object.__setattr__(self, "tier", NodeTier(self.tier))
        if not (math.isfinite(self.rate_bps) and self.rate_bps > 0.0):
            raise DomainError(f"rate_bps must be positive: {self.rate_bps!r}")
        if not (math.isfinite(self.link_delay_s) and self.link_delay_s >= 0.0):
            raise DomainError(f"link_delay_s must be non-negative: {self.link_delay_s!r}")
        if not (math.isfinite(self.mean_service_time_s) and self.mean_service_time_s > 0.0):
            raise DomainError(f"mean_service_time_s must be positive: {self.mean_service_time_s!r}")
        if not (0.0 <= self.load < 1.0):
            raise DomainError(f"load outside [0,1): {self.load!r}")


def request_delay(node: NodeSpec) -> float:
    """Link delay plus queueing service delay, paid once per contacted node."""
    return node.link_delay_s + service_delay(node.mean_service_time_s, node.load)


@dataclass(frozen=True)
class DerivedNode:
    spec: NodeSpec
    service_delay_s: float
    request_delay_s: float

    @classmethod
    def from_spec(cls, spec: NodeSpec) -> "DerivedNode":
        d_service = service_delay(spec.mean_service_time_s, spec.load)
        return cls(spec, d_service, spec.link_delay_s + d_service)


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Snapshot:
    """A frozen system instance: ordered nodes and the volume to retrieve."""

    nodes: tuple[DerivedNode, ...]
    data_bits: float
    request_delays: np.ndarray = field(init=False, repr=False)
    rates: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        if not nodes:
            raise DomainError("a snapshot needs at least one node")
        if not (math.isfinite(self.data_bits) and self.data_bits > 0.0):
            raise DomainError(f"data_bits must be positive: {self.data_bits!r}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "request_delays", _readonly([n.request_delay_s for n in nodes]))
        object.__setattr__(self, "rates", _readonly([n.spec.rate_bps for n in nodes]))

    @classmethod
    def from_specs(cls, specs: Sequence[NodeSpec], data_bits: float) -> "Snapshot":
        return cls(tuple(DerivedNode.from_spec(s) for s in specs), float(data_bits))

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def transfer_times(self) -> np.ndarray:
        """Seconds each node needs to ship the whole volume alone (``k / Rb``)."""
        return self.data_bits / self.rates


def download_time(node: DerivedNode, alpha: float, data_bits: float) -> float:
    """Request delay plus the time to send ``alpha`` of ``data_bits``."""
    if not (0.0 <= alpha <= 1.0):
        raise DomainError(f"alpha outside [0,1]: {alpha!r}")
    if not data_bits > 0.0:
        raise DomainError(f"data_bits must be positive: {data_bits!r}")
    return node.request_delay_s + alpha * data_bits / node.spec.rate_bps


def _check_alphas(n: int, alphas) -> np.ndarray:
    arr = np.asarray(alphas, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise DomainError(f"expected {n} alphas, got shape {arr.shape}")
    if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
        raise DomainError("alphas must lie in [0,1]")
    return arr


def total_download_time(snapshot: Snapshot, alphas) -> float:
    """Completion time of a parallel download: the slowest contacted node.

    Nodes with ``alpha == 0`` are never contacted and do not count. An
    all-zero vector downloads nothing and takes zero time.
    """
    arr = _check_alphas(snapshot.n, alphas)
    used = arr > 0.0
    if not used.any():
        return 0.0
    times = snapshot.request_delays + arr * snapshot.transfer_times
    return float(times[used].max())


@dataclass(frozen=True, eq=False)
class Allocation:
    alphas: np.ndarray
    total_time_s: float
    strategy: Strategy

    def __post_init__(self):
        arr = _readonly(self.alphas)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("alphas must be a non-empty vector")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise DomainError("alphas must lie in [0,1]")
        if abs(float(arr.sum()) - 1.0) > ATOL:
            raise DomainError(f"alphas must sum to 1, got {arr.sum()!r}")
        object.__setattr__(self, "alphas", arr)
        object.__setattr__(self, "strategy", Strategy(self.strategy))

    @classmethod
    def build(cls, snapshot: Snapshot, alphas, strategy: Strategy) -> "Allocation":
        return cls(np.asarray(alphas, dtype=float), total_download_time(snapshot, alphas), strategy)
