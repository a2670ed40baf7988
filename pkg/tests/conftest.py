import os

import numpy as np
import pytest
from hypothesis import settings

from fogalloc import _waterfill
from fogalloc._backend import HAVE_NUMBA
from fogalloc.model import NodeSpec, NodeTier, Snapshot
from fogalloc.rlnc import _elim

settings.register_profile("default", deadline=None, max_examples=100)
settings.register_profile("thorough", deadline=None, max_examples=3000)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BACKENDS = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def kernels(request):
    """Both kernel implementations, regardless of FOGALLOC_BACKEND."""
    suffix = request.param
    return {
        "name": suffix,
        "waterfill": getattr(_waterfill, f"waterfill_batch_{suffix}"),
        "grid": getattr(_waterfill, f"grid_search_{suffix}"),
        "reduce": getattr(_elim, f"reduce_batch_{suffix}"),
        "matmul": getattr(_elim, f"matmul_{suffix}"),
    }


def make_snapshot(request_delays, rates_bps, data_bits, tier=NodeTier.FOG):
    """Snapshot whose nodes have exactly the given request delays (zero load)."""
    specs = [NodeSpec(tier, float(r), float(d) / 2, float(d) / 2, 0.0) for d, r in zip(request_delays, rates_bps)]
    return Snapshot.from_specs(specs, data_bits)


def random_snapshot(rng, n=None, data_bits=None):
    n = n or int(rng.integers(1, 13))
    specs = [
        NodeSpec(
            NodeTier.CLOUD if rng.random() < 0.5 else NodeTier.FOG,
            rng.uniform(1e6, 100e6),
            rng.uniform(0.0, 1.0),
            rng.uniform(0.005, 0.1),
            rng.choice([rng.uniform(0.0, 0.95), 0.99]),
        )
        for _ in range(n)
    ]
    return Snapshot.from_specs(specs, data_bits or rng.uniform(1e6, 2e9))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" in rep.nodeid and rep.when == "call":
                lines.append((rep.nodeid.split("::")[-1], "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"{verdict}  {name}")
