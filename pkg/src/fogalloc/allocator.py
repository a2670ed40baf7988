"""Splitting a download across nodes: equal, rate-proportional and min-max optimal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _waterfill
from .model import ATOL, Allocation, DomainError, Snapshot, Strategy

ORACLE_MAX_NODES = 4


class InfeasibleConstraintsError(DomainError):
    pass


@dataclass(frozen=True)
class AllocConstraints:
    """Optional extra constraints for :func:`alloc_opt`.

    ``msr_lower_bound`` asks every node to hold at least ``1/(N-1)`` of the
    data, the minimum-storage-regenerating amount that survives one node loss.
    """

    msr_lower_bound: bool = False


@dataclass(frozen=True, eq=False)
class OptSolution:
    allocation: Allocation
    t_star: float
    active_set: tuple[int, ...]
    saturated_set: tuple[int, ...]
    excluded_set: tuple[int, ...]
    kkt_residual: float

    @property
    def alphas(self) -> np.ndarray:
        return self.allocation.alphas


def alloc_equal(snapshot: Snapshot) -> Allocation:
    alphas = np.full(snapshot.n, 1.0 / snapshot.n)
    return Allocation.build(snapshot, alphas, Strategy.EQ)


def alloc_rate(snapshot: Snapshot) -> Allocation:
    alphas = snapshot.rates / snapshot.rates.sum()
    return Allocation.build(snapshot, alphas, Strategy.RB)


def _partition(alphas: np.ndarray) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    idx = np.arange(alphas.size)
    active = tuple(int(i) for i in idx[(alphas > 0.0) & (alphas < 1.0)])
    saturated = tuple(int(i) for i in idx[alphas >= 1.0])
    excluded = tuple(int(i) for i in idx[alphas <= 0.0])
    return active, saturated, excluded


def _check_msr(n: int) -> None:
    if n < 2:
        raise InfeasibleConstraintsError("infeasible constraints: the MSR bound needs at least two nodes")
    lower = 1.0 / (n - 1)
    if n * lower > 1.0 + ATOL:
        raise InfeasibleConstraintsError(
            f"infeasible constraints: MSR bound requires each alpha >= {lower:.6g}, "
            f"which sums to {n * lower:.6g} > 1 over {n} nodes"
        )


def alloc_opt(snapshot: Snapshot, constraints: AllocConstraints = AllocConstraints()) -> OptSolution:
    """Exact minimiser of the parallel download time.

    The water level ``T`` is raised until the per-node shares
    ``clip((T - d_request) / (k / Rb), 0, 1)`` add up to one; nodes whose
    request delay alone exceeds the level receive nothing.

    Raises
    ------
    InfeasibleConstraintsError
        If ``constraints`` cannot be met together with ``sum(alpha) == 1``.
    """
    if constraints.msr_lower_bound:
        _check_msr(snapshot.n)
    b = snapshot.request_delays[None, :]
    a = snapshot.transfer_times[None, :]
    levels, alphas = _waterfill.waterfill_batch(np.ascontiguousarray(b), np.ascontiguousarray(a))
    level = float(levels[0])
    alpha = alphas[0]
    allocation = Allocation.build(snapshot, alpha, Strategy.OPT)
    residual = kkt_residuals(snapshot, alpha, level)
    if residual > ATOL:
        raise ArithmeticError(f"water-filling certificate failed: residual {residual:.3e}")
    active, saturated, excluded = _partition(allocation.alphas)
    return OptSolution(allocation, level, active, saturated, excluded, residual)


def kkt_residuals(snapshot: Snapshot, alphas, t_star: float) -> float:
    """Largest violation of the optimality conditions of the min-max LP.

    Checked: primal feasibility; every contacted node finishes by ``t_star``
    and, unless it sends everything, finishes exactly at ``t_star``; every
    idle node could not start before ``t_star``; ``t_star`` is attained.
    Zero (up to rounding) certifies global optimality.
    """
    x = np.asarray(alphas, dtype=float)
    if x.shape != (snapshot.n,):
        raise DomainError(f"expected {snapshot.n} alphas, got shape {x.shape}")
    b = snapshot.request_delays
    finish = b + x * snapshot.transfer_times
    used = x > 0.0
    partial = used & (x < 1.0)

    violations = [
        abs(float(x.sum()) - 1.0),
        float(np.max(-x, initial=0.0)),
        float(np.max(x - 1.0, initial=0.0)),
        float(np.max(finish[used] - t_star, initial=0.0)),
        float(np.max(t_star - finish[partial], initial=0.0)),
        float(np.max(t_star - b[~used], initial=0.0)),
    ]
    if used.any():
        violations.append(max(t_star - float(finish[used].max()), 0.0))
    return max(violations)


def oracle_opt(snapshot: Snapshot, grid_steps: int = 1000) -> Allocation:
    """Exhaustive search over the simplex grid with spacing ``1/grid_steps``.

    A test oracle only: cost grows like ``grid_steps ** (N - 1)``.
    """
    if snapshot.n > ORACLE_MAX_NODES:
        raise DomainError(f"oracle_opt refuses N={snapshot.n} > {ORACLE_MAX_NODES}")
    if grid_steps < 100:
        raise DomainError(f"grid_steps must be at least 100, got {grid_steps}")
    b = np.ascontiguousarray(snapshot.request_delays)
    a = np.ascontiguousarray(snapshot.transfer_times)
    _, comp = _waterfill.grid_search(b, a, int(grid_steps))
    alphas = np.asarray(comp, dtype=float) / grid_steps
    return Allocation.build(snapshot, alphas, Strategy.OPT)


def oracle_resolution(snapshot: Snapshot, grid_steps: int) -> float:
    """Worst-case gap between the grid optimum and the true optimum."""
    return float(snapshot.transfer_times.max()) / grid_steps


def batch_total_times(request_delays, rates, data_bits: float, strategy: Strategy) -> np.ndarray:
    """Download time per row of an ``(runs, N)`` batch under one strategy.

    Same arithmetic as the per-snapshot functions, without object overhead.
    """
    b = np.ascontiguousarray(request_delays, dtype=float)
    r = np.ascontiguousarray(rates, dtype=float)
    a = data_bits / r
    strategy = Strategy(strategy)
    if strategy is Strategy.EQ:
        return (b + (1.0 / b.shape[1]) * a).max(axis=1)
    if strategy is Strategy.RB:
        alphas = r / r.sum(axis=1, keepdims=True)
        return (b + alphas * a).max(axis=1)
    if strategy is Strategy.SINGLE:
        return (b + a).min(axis=1)
    levels, alphas = _waterfill.waterfill_batch(b, a)
    finish = np.where(alphas > 0.0, b + alphas * a, -np.inf)
    return finish.max(axis=1)
