"""Download-time optimal placement of network-coded data on fog and cloud nodes."""

from ._backend import BACKEND
from .allocator import (
    AllocConstraints,
    InfeasibleConstraintsError,
    OptSolution,
    alloc_equal,
    alloc_opt,
    alloc_rate,
    kkt_residuals,
    oracle_opt,
)
from .model import (
    Allocation,
    DerivedNode,
    DomainError,
    NodeSpec,
    NodeTier,
    Snapshot,
    Strategy,
    download_time,
    request_delay,
    service_delay,
    total_download_time,
)
from .scenario import (
    Injection,
    InjectionKind,
    ScenarioConfig,
    SweepParameter,
    SweepSpec,
    run_sweep,
    sample_snapshot,
    single_best_node,
)
from .stats import FiveNumberSummary, SweepResult, linear_fit, summarize

__version__ = "0.1.0"

__all__ = [
    "AllocConstraints",
    "Allocation",
    "BACKEND",
    "DerivedNode",
    "DomainError",
    "FiveNumberSummary",
    "InfeasibleConstraintsError",
    "Injection",
    "InjectionKind",
    "NodeSpec",
    "NodeTier",
    "OptSolution",
    "ScenarioConfig",
    "Snapshot",
    "Strategy",
    "SweepParameter",
    "SweepResult",
    "SweepSpec",
    "alloc_equal",
    "alloc_opt",
    "alloc_rate",
    "download_time",
    "kkt_residuals",
    "linear_fit",
    "oracle_opt",
    "request_delay",
    "run_sweep",
    "sample_snapshot",
    "service_delay",
    "single_best_node",
    "summarize",
    "total_download_time",
]
