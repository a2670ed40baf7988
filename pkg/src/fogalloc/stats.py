"""Box-plot summaries and least-squares trend lines for sweep output."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import DomainError


@dataclass(frozen=True)
class FiveNumberSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    n: int
    mean: float
    variance: float

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    @classmethod
    def empty(cls) -> "FiveNumberSummary":
        nan = math.nan
        return cls(nan, nan, nan, nan, nan, 0, nan, nan)


def _median_sorted(xs: np.ndarray) -> float:
    n = xs.size
    mid = n // 2
    if n % 2:
        return float(xs[mid])
    return float((xs[mid - 1] + xs[mid]) / 2.0)


def summarize(samples: Sequence[float]) -> FiveNumberSummary:
    """Quartiles by the median-of-halves rule.

    The halves exclude the overall median when ``n`` is odd; a single sample
    is its own quartiles. Variance uses the ``n - 1`` denominator and is 0
    for one sample.
    """
    xs = np.sort(np.asarray(samples, dtype=float).ravel())
    n = xs.size
    if n == 0:
        raise DomainError("cannot summarize an empty sample")
    if n == 1:
        lower = upper = xs
    else:
        lower = xs[: n // 2]
        upper = xs[(n + 1) // 2:]
    variance = float(xs.var(ddof=1)) if n > 1 else 0.0
    return FiveNumberSummary(
        min=float(xs[0]),
        q1=_median_sorted(lower),
        median=_median_sorted(xs),
        q3=_median_sorted(upper),
        max=float(xs[-1]),
        n=int(n),
        mean=float(xs.mean()),
        variance=variance,
    )


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> LinearFit:
    """Ordinary least squares. ``r_squared`` is 1 when the residuals vanish."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("xs and ys must be equal-length vectors")
    if x.size < 2:
        raise DomainError("need at least two points")
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DomainError("xs are all equal")
    slope = float(dx @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ss_res = float(resid @ resid)
    dy = y - y.mean()
    ss_tot = float(dy @ dy)
    scale = max(float(np.abs(y).max()), 1.0)
    if ss_res <= (1e-12 * scale) ** 2 * x.size:
        r2 = 1.0
    elif ss_tot == 0.0:
        r2 = 0.0
    else:
        r2 = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return LinearFit(slope, intercept, r2)


def _label(strategy) -> str:
    return strategy.value if isinstance(strategy, enum.Enum) else str(strategy)


@dataclass(frozen=True)
class SweepRow:
    value: object
    strategy: str
    summary: FiveNumberSummary
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    provenance: dict = field(default_factory=dict)

    def row(self, value, strategy) -> SweepRow:
        for r in self.rows:
            if r.value == value and r.strategy == _label(strategy):
                return r
        raise KeyError((value, strategy))

    def series(self, strategy, stat: str = "mean") -> tuple[list, list[float]]:
        """Sweep values and one summary statistic for a strategy, in row order."""
        pick = [r for r in self.rows if r.strategy == _label(strategy)]
        return [r.value for r in pick], [getattr(r.summary, stat) for r in pick]
