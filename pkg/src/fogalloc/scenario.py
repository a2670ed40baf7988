"""Seeded snapshot generators and parameter sweeps.

Every random draw comes from a substream keyed by ``(seed, run, tier, index)``
so that adding a node, or running runs in a different order or on another
worker, changes none of the existing draws.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .allocator import batch_total_times
from .model import Allocation, DomainError, NodeSpec, NodeTier, Snapshot, Strategy
from .stats import FiveNumberSummary, SweepResult, SweepRow, summarize

log = logging.getLogger(__name__)

DEFAULT_SEED = 0
BITS_PER_MB = 8e6
PACKET_MB = 1.0
LOAD_PRESETS = ((0.1, 0.3), (0.3, 0.5), (0.5, 0.7), (0.7, 0.9))

HIGH_LATENCY_RANGE_S = (0.5, 1.0)
HIGH_LOAD_RANGE = (0.8, 0.95)
OUTAGE_LOAD = 0.99

_UINT64 = (1 << 64) - 1
_TIER_CODE = {NodeTier.CLOUD: 0, NodeTier.FOG: 1}
_INJECTION_STREAM = 2


class ConfigError(DomainError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _as_range(name: str, value, lo_bound: float = -math.inf, hi_bound: float = math.inf,
              hi_open: bool = False) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a [lo, hi] pair, got {value!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ConfigError(name, f"need finite lo <= hi, got [{lo}, {hi}]")
    if lo < lo_bound or hi > hi_bound or (hi_open and hi >= hi_bound):
        interval = f"[{lo_bound}, {hi_bound}{')' if hi_open else ']'}"
        raise ConfigError(name, f"range [{lo}, {hi}] must lie within {interval}")
    return lo, hi


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario knobs in the units a user writes them: ms, Mbps, MB.

    Defaults are the reference scenario: 5 clouds, 3 fogs, one access-only
    base station, 100 MB.
    """

    n_cloud: int = 5
    n_fog: int = 3
    n_plain_bs: int = 1
    data_mb: float = 100.0
    cloud_ts_ms: float = 20.0
    fog_ts_ms: float = 50.0
    cloud_load_range: tuple[float, float] = (0.4, 0.9)
    fog_load_range: tuple[float, float] = (0.2, 0.7)
    access_link_ms_range: tuple[float, float] = (30.0, 100.0)
    cloud_link_multiplier: float = 2.0
    rate_mbps_range: tuple[float, float] = (15.0, 72.0)
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        for name in ("n_cloud", "n_fog", "n_plain_bs"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
                raise ConfigError(name, f"must be a non-negative integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        for name in ("data_mb", "cloud_ts_ms", "fog_ts_ms", "cloud_link_multiplier"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ConfigError(name, f"must be a number, got {value!r}") from None
            if not (math.isfinite(value) and value > 0.0):
                raise ConfigError(name, f"must be positive, got {value!r}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "cloud_load_range",
                           _as_range("cloud_load_range", self.cloud_load_range, 0.0, 1.0, hi_open=True))
        object.__setattr__(self, "fog_load_range",
                           _as_range("fog_load_range", self.fog_load_range, 0.0, 1.0, hi_open=True))
        object.__setattr__(self, "access_link_ms_range",
                           _as_range("access_link_ms_range", self.access_link_ms_range, 0.0))
        lo, hi = _as_range("rate_mbps_range", self.rate_mbps_range, 0.0)
        if lo <= 0.0:
            raise ConfigError("rate_mbps_range", "rates must be positive")
        object.__setattr__(self, "rate_mbps_range", (lo, hi))
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ConfigError("seed", f"must be an integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed) & _UINT64)

    @property
    def n_nodes(self) -> int:
        return self.n_cloud + self.n_fog

    @property
    def data_bits(self) -> float:
        return self.data_mb * BITS_PER_MB

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], f"unknown key (allowed: {', '.join(sorted(known))})")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "ScenarioConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(str(path), f"cannot read config file: {exc.strerror or exc}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"invalid JSON: {exc}") from None
        return cls.from_dict(data)


class InjectionKind(str, enum.Enum):
    HIGH_LATENCY = "high_latency"
    HIGH_LOAD = "high_load"
    OUTAGE = "outage"


@dataclass(frozen=True)
class Injection:
    """Degrade ``count`` randomly chosen nodes (optionally only of ``tier``).

    High latency redraws the link delay in 0.5-1 s, high load redraws the load
    in 0.8-0.95 and an outage pins the load at 0.99.
    """

    kind: InjectionKind
    count: int
    tier: NodeTier | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", InjectionKind(self.kind))
        if self.tier is not None:
            object.__setattr__(self, "tier", NodeTier(self.tier))
        if self.count < 0:
            raise DomainError(f"injection count must be non-negative, got {self.count}")


@dataclass(frozen=True)
class NodeDraws:
    """Raw per-node parameters of one run, SI units, clouds first."""

    tiers: tuple[NodeTier, ...]
    rate_bps: np.ndarray
    link_delay_s: np.ndarray
    mean_service_time_s: np.ndarray
    load: np.ndarray

    @property
    def request_delay_s(self) -> np.ndarray:
        return self.link_delay_s + self.mean_service_time_s / (1.0 - self.load)


def _substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def draw_nodes(config: ScenarioConfig, injections: Iterable[Injection] = (), run_index: int = 0) -> NodeDraws:
    if run_index < 0:
        raise DomainError(f"run_index must be non-negative, got {run_index}")
    tiers = [NodeTier.CLOUD] * config.n_cloud + [NodeTier.FOG] * config.n_fog
    n = len(tiers)
    rate = np.empty(n)
    link = np.empty(n)
    ts = np.empty(n)
    load = np.empty(n)
    for i, tier in enumerate(tiers):
        within = i if tier is NodeTier.CLOUD else i - config.n_cloud
        rng = _substream(config.seed, run_index, _TIER_CODE[tier], within)
        if tier is NodeTier.CLOUD:
            load_range, ts_ms, mult = config.cloud_load_range, config.cloud_ts_ms, config.cloud_link_multiplier
        else:
            load_range, ts_ms, mult = config.fog_load_range, config.fog_ts_ms, 1.0
        load[i] = rng.uniform(*load_range)
        link[i] = rng.uniform(*config.access_link_ms_range) * mult / 1000.0
        rate[i] = rng.uniform(*config.rate_mbps_range) * 1e6
        ts[i] = ts_ms / 1000.0

    for j, inj in enumerate(injections):
        candidates = np.array([i for i, t in enumerate(tiers) if inj.tier is None or t is inj.tier], dtype=np.int64)
        if inj.count > candidates.size:
            raise DomainError(
                f"injection of {inj.count} {inj.kind.value} nodes exceeds the {candidates.size} eligible nodes"
            )
        rng = _substream(config.seed, run_index, _INJECTION_STREAM, j)
        targets = rng.choice(candidates, size=inj.count, replace=False)
        for t in targets:
            if inj.kind is InjectionKind.HIGH_LATENCY:
                link[t] = rng.uniform(*HIGH_LATENCY_RANGE_S)
            elif inj.kind is InjectionKind.HIGH_LOAD:
                load[t] = rng.uniform(*HIGH_LOAD_RANGE)
            else:
                load[t] = OUTAGE_LOAD
    return NodeDraws(tuple(tiers), rate, link, ts, load)


def sample_snapshot(config: ScenarioConfig, injections: Sequence[Injection] = (), run_index: int = 0) -> Snapshot:
    """One frozen system instance; identical for identical arguments."""
    d = draw_nodes(config, injections, run_index)
    specs = [
        NodeSpec(t, float(r), float(lk), float(ts), float(ld))
        for t, r, lk, ts, ld in zip(d.tiers, d.rate_bps, d.link_delay_s, d.mean_service_time_s, d.load)
    ]
    return Snapshot.from_specs(specs, config.data_bits)


def sample_batch(config: ScenarioConfig, injections: Sequence[Injection], runs: Sequence[int],
                 workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Request delays and rates for many runs, each of shape ``(len(runs), N)``."""
    runs = list(runs)

    def chunk(idx: list[int]) -> tuple[np.ndarray, np.ndarray]:
        draws = [draw_nodes(config, injections, r) for r in idx]
        return (np.array([d.request_delay_s for d in draws]).reshape(len(idx), config.n_nodes),
                np.array([d.rate_bps for d in draws]).reshape(len(idx), config.n_nodes))

    if workers <= 1 or len(runs) < 2:
        return chunk(runs)
    size = math.ceil(len(runs) / workers)
    pieces = [runs[i:i + size] for i in range(0, len(runs), size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(chunk, pieces))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def single_best_node(snapshot: Snapshot) -> Allocation:
    """Everything from the one node that would finish first on its own."""
    best = int(np.argmin(snapshot.request_delays + snapshot.transfer_times))
    alphas = np.zeros(snapshot.n)
    alphas[best] = 1.0
    return Allocation.build(snapshot, alphas, Strategy.SINGLE)


class SweepParameter(str, enum.Enum):
    FOG_COUNT = "fogs"
    CLOUD_COUNT = "clouds"
    FOG_LOAD_INTERVAL = "fog-load"
    CLOUD_LOAD_INTERVAL = "cloud-load"
    GENERATION_SIZE = "gensize"
    INJECTION_COUNT = "injection-count"


@dataclass(frozen=True)
class SweepSpec:
    """One knob varied over ``values``; ``runs_per_value`` snapshots each.

    Generation sizes are packet counts of ``PACKET_MB`` megabytes. For
    ``INJECTION_COUNT`` the values are node counts of ``injection_kind``,
    applied after any ``base_injections``.
    """

    parameter: SweepParameter
    values: tuple
    runs_per_value: int
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    injection_kind: InjectionKind | None = None
    base_injections: tuple[Injection, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "parameter", SweepParameter(self.parameter))
        object.__setattr__(self, "values", tuple(
            tuple(v) if isinstance(v, (list, tuple)) else v for v in self.values))
        object.__setattr__(self, "base_injections", tuple(self.base_injections))
        if not self.values:
            raise DomainError("a sweep needs at least one value")
        if self.runs_per_value < 1:
            raise DomainError(f"runs_per_value must be at least 1, got {self.runs_per_value}")
        if self.parameter is SweepParameter.INJECTION_COUNT:
            if self.injection_kind is None:
                raise DomainError("an injection-count sweep needs an injection_kind")
            object.__setattr__(self, "injection_kind", InjectionKind(self.injection_kind))

    def setting(self, value) -> tuple[ScenarioConfig, tuple[Injection, ...]]:
        p = self.parameter
        if p is SweepParameter.FOG_COUNT:
            return self.base.replace(n_fog=int(value)), self.base_injections
        if p is SweepParameter.CLOUD_COUNT:
            return self.base.replace(n_cloud=int(value)), self.base_injections
        if p is SweepParameter.FOG_LOAD_INTERVAL:
            return self.base.replace(fog_load_range=tuple(value)), self.base_injections
        if p is SweepParameter.CLOUD_LOAD_INTERVAL:
            return self.base.replace(cloud_load_range=tuple(value)), self.base_injections
        if p is SweepParameter.GENERATION_SIZE:
            return self.base.replace(data_mb=float(value) * PACKET_MB), self.base_injections
        return self.base, self.base_injections + (Injection(self.injection_kind, int(value)),)

    def provenance(self) -> dict:
        return {
            "parameter": self.parameter.value,
            "values": [list(v) if isinstance(v, tuple) else v for v in self.values],
            "runs_per_value": self.runs_per_value,
            "injection_kind": self.injection_kind.value if self.injection_kind else None,
            "base_injections": [
                {"kind": i.kind.value, "count": i.count, "tier": i.tier.value if i.tier else None}
                for i in self.base_injections
            ],
            "base": self.base.to_dict(),
            "seed": self.base.seed,
        }


DEFAULT_STRATEGIES = (Strategy.EQ, Strategy.RB, Strategy.OPT)


def run_sweep(spec: SweepSpec, strategies: Iterable[Strategy] = DEFAULT_STRATEGIES,
              workers: int = 1) -> SweepResult:
    """Summaries of the download time per (value, strategy).

    Rows come sorted by value, then strategy label. A value that leaves no
    storage node, or whose injections do not fit, yields rows with ``n == 0``
    and an ``error`` message.
    """
    labels = sorted({Strategy(s) for s in strategies}, key=lambda s: s.value)
    if not labels:
        raise DomainError("no strategies requested")
    runs = range(spec.runs_per_value)
    rows = []
    for value in sorted(spec.values):
        config, injections = spec.setting(value)
        error = None
        if config.n_nodes == 0:
            error = "no storage nodes"
        else:
            try:
                b, r = sample_batch(config, injections, runs, workers)
            except DomainError as exc:
                error = str(exc)
        for strategy in labels:
            if error is not None:
                log.warning("sweep value %r: %s", value, error)
                rows.append(SweepRow(value, strategy.value, FiveNumberSummary.empty(), error))
                continue
            times = batch_total_times(b, r, config.data_bits, strategy)
            rows.append(SweepRow(value, strategy.value, summarize(times)))
    provenance = spec.provenance()
    provenance["strategies"] = [s.value for s in labels]
    return SweepResult(tuple(rows), provenance)


def fog_outage_injections() -> tuple[Injection, ...]:
    """All three reference fog nodes pinned at outage load (5 s service delay at 50 ms)."""
    return (Injection(InjectionKind.OUTAGE, 3, NodeTier.FOG),)
