"""Min-max allocation kernels.

Each row is one snapshot reduced to two vectors: ``b`` (request delay, s)
and ``a`` (seconds to send the whole volume from that node alone). A node
given fraction ``x`` finishes at ``b + x * a``. The level ``T`` at which
``G(T) = sum(clip((T - b) / a, 0, 1))`` first reaches 1 is the optimum.
"""

from __future__ import annotations

import numpy as np

from ._backend import njit, pick, prange

# slack on G(T) >= 1 and on "idle" shares; keeps rounding from contacting a
# node whose request delay equals the level
SNAP = 1e-12
# a share this close to 1 is a rounding artefact of a saturated node
FULL = 1.0 - 4.0 * np.finfo(np.float64).eps


@njit
def _waterfill_row(b, a, out):
    n = b.shape[0]
    m = 2 * n
    ends = b + a
    times = np.concatenate((b, ends))
    order = np.argsort(times, kind="mergesort")

    # G at each distinct breakpoint, evaluated afresh; a node counts as exactly
    # 1 from its own end breakpoint on, so tiny a next to large b cannot leave
    # G just short of 1 through cancellation
    t_prev = times[order[0]]
    t0 = t_prev
    t1 = times[order[m - 1]]
    for j in range(m):
        t = times[order[j]]
        if j > 0 and t == t_prev:
            continue
        g = 0.0
        for i in range(n):
            if t >= ends[i]:
                g += 1.0
            elif t > b[i]:
                g += (t - b[i]) / a[i]
        if g >= 1.0 - SNAP:
            t0 = t_prev
            t1 = t
            break
        t_prev = t

    # exact level on the bracketing segment
    inv_sum = 0.0
    num = 1.0
    for i in range(n):
        end = ends[i]
        if t1 > t0 and b[i] <= t0 and end >= t1:
            inv_sum += 1.0 / a[i]
            num += b[i] / a[i]
        elif end <= t0:
            num -= 1.0
    if inv_sum > 0.0:
        level = num / inv_sum
        if level < t0:
            level = t0
        elif level > t1:
            level = t1
    else:
        level = t1

    total = 0.0
    inv_sum = 0.0
    for i in range(n):
        x = (level - b[i]) / a[i]
        if x <= SNAP:
            x = 0.0
        elif x >= FULL:
            x = 1.0
        out[i] = x
        total += x
        if 0.0 < x < 1.0:
            inv_sum += 1.0 / a[i]
    # level - b loses digits when a << b; shift the partial shares so the sum is 1
    if inv_sum > 0.0:
        shift = (1.0 - total) / inv_sum
        for i in range(n):
            if 0.0 < out[i] < 1.0:
                out[i] = min(max(out[i] + shift / a[i], 0.0), 1.0)

    # the root may sit at the left end of a flat stretch of G; report the
    # latest finish among contacted nodes, which is the attained time
    attained = -np.inf
    for i in range(n):
        x = out[i]
        if x > 0.0:
            finish = b[i] + x * a[i]
            if finish > attained:
                attained = finish
    return attained


@njit
def waterfill_batch_numba(b, a):
    rows, n = b.shape
    alphas = np.empty((rows, n))
    levels = np.empty(rows)
    for r in range(rows):
        levels[r] = _waterfill_row(b[r], a[r], alphas[r])
    return levels, alphas


def waterfill_batch_numpy(b, a):
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    rows, n = b.shape
    bp = np.sort(np.concatenate([b, b + a], axis=1), axis=1, kind="mergesort")
    t = bp[:, :, None]
    ends = (b + a)[:, None, :]
    share = np.clip((t - b[:, None, :]) / a[:, None, :], 0.0, 1.0)
    g = np.where(t >= ends, 1.0, share).sum(axis=2)
    hit = g >= 1.0 - SNAP
    j = np.where(hit.any(axis=1), hit.argmax(axis=1), 2 * n - 1)
    r_idx = np.arange(rows)
    t1 = bp[r_idx, j]
    t0 = np.where(j > 0, bp[r_idx, np.maximum(j - 1, 0)], t1)

    end = b + a
    active = (t1 > t0)[:, None] & (b <= t0[:, None]) & (end >= t1[:, None])
    saturated = ~active & (end <= t0[:, None])
    inv_sum = np.where(active, 1.0 / a, 0.0).sum(axis=1)
    num = 1.0 + np.where(active, b / a, 0.0).sum(axis=1) - saturated.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        level = np.where(inv_sum > 0.0, np.clip(num / inv_sum, t0, t1), t1)
    alphas = np.clip((level[:, None] - b) / a, 0.0, 1.0)
    alphas[alphas <= SNAP] = 0.0
    alphas[alphas >= FULL] = 1.0
    partial = (alphas > 0.0) & (alphas < 1.0)
    inv_partial = np.where(partial, 1.0 / a, 0.0).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(inv_partial > 0.0, (1.0 - alphas.sum(axis=1)) / inv_partial, 0.0)
    alphas = np.where(partial, np.clip(alphas + shift[:, None] / a, 0.0, 1.0), alphas)
    attained = np.where(alphas > 0.0, b + alphas * a, -np.inf).max(axis=1)
    return attained, alphas


waterfill_batch = pick(waterfill_batch_numba, waterfill_batch_numpy)


def finish_table(b, a, steps):
    """``table[i, c]``: finish time of node i sending ``c/steps``; idle is ``-inf``."""
    frac = np.arange(steps + 1) / steps
    table = b[:, None] + frac[None, :] * a[:, None]
    table[:, 0] = -np.inf
    return table


@njit(parallel=True)
def _grid_numba(table, steps):
    n = table.shape[0]
    best_val = np.full(steps + 1, np.inf)
    best_comp = np.zeros((steps + 1, n), dtype=np.int64)
    for c0 in prange(steps + 1):
        if n == 1:
            if c0 == steps:
                best_val[c0] = table[0, c0]
                best_comp[c0, 0] = c0
            continue
        rem = steps - c0
        comp = np.zeros(n, dtype=np.int64)
        comp[0] = c0
        s = 0
        while True:
            # parts 0..n-3 fixed here; the last two share what is left
            head = table[0, c0]
            for i in range(1, n - 2):
                if table[i, comp[i]] > head:
                    head = table[i, comp[i]]
            left = rem - s
            if n == 2:
                v = max(head, table[1, left])
                if v < best_val[c0]:
                    best_val[c0] = v
                    best_comp[c0, 1] = left
            else:
                for x in range(left + 1):
                    v = max(head, table[n - 2, x], table[n - 1, left - x])
                    if v < best_val[c0]:
                        best_val[c0] = v
                        for i in range(1, n - 2):
                            best_comp[c0, i] = comp[i]
                        best_comp[c0, n - 2] = x
                        best_comp[c0, n - 1] = left - x
            # odometer over parts 1..n-3, last position fastest
            p = n - 3
            while p >= 1:
                comp[p] += 1
                s += 1
                if s <= rem:
                    break
                s -= comp[p]
                comp[p] = 0
                p -= 1
            if p < 1:
                break
        best_comp[c0, 0] = c0
    k = np.argmin(best_val)
    return best_val[k], best_comp[k].copy()


def grid_search_numba(b, a, steps):
    return _grid_numba(finish_table(np.asarray(b, float), np.asarray(a, float), steps), steps)


def _compositions(total, parts):
    """All non-negative integer vectors of length ``parts`` summing to ``total``, lexicographic."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    if parts == 2:
        head = np.arange(total + 1, dtype=np.int64)
        return np.column_stack([head, total - head])
    blocks = []
    for first in range(total + 1):
        tail = _compositions(total - first, parts - 1)
        blocks.append(np.column_stack([np.full(len(tail), first, dtype=np.int64), tail]))
    return np.concatenate(blocks)


def grid_search_numpy(b, a, steps):
    table = finish_table(np.asarray(b, float), np.asarray(a, float), steps)
    n = table.shape[0]
    rows = np.arange(n)
    best_val = np.inf
    best_comp = None
    for c0 in range(steps + 1):
        rem = steps - c0
        if n == 1:
            if rem:
                continue
            comps = np.array([[c0]], dtype=np.int64)
        else:
            tail = _compositions(rem, n - 1)
            comps = np.column_stack([np.full(len(tail), c0, dtype=np.int64), tail])
        times = table[rows, comps].max(axis=1)
        k = int(np.argmin(times))
        if times[k] < best_val:
            best_val = float(times[k])
            best_comp = comps[k].copy()
    return best_val, best_comp


grid_search = pick(grid_search_numba, grid_search_numpy)
