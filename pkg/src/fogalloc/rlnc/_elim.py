"""GF(2^q) linear algebra kernels on uint8 arrays.

Field elements and packed payload bytes are both multiplied through the
``byte_mul`` table of :class:`~fogalloc.rlnc.field.GaloisField`; addition
is XOR.
"""

from __future__ import annotations

import numpy as np

from .._backend import njit, pick


@njit
def _reduce_numba(aug, ncols, byte_mul, inv):
    """In-place Gauss-Jordan on the first ``ncols`` columns; returns the rank."""
    rows, width = aug.shape
    rank = 0
    for col in range(ncols):
        if rank == rows:
            break
        pivot = -1
        for r in range(rank, rows):
            if aug[r, col] != 0:
                pivot = r
                break
        if pivot < 0:
            continue
        if pivot != rank:
            for j in range(width):
                tmp = aug[rank, j]
                aug[rank, j] = aug[pivot, j]
                aug[pivot, j] = tmp
        scale = inv[aug[rank, col]]
        for j in range(width):
            aug[rank, j] = byte_mul[scale, aug[rank, j]]
        for r in range(rows):
            factor = aug[r, col]
            if r != rank and factor != 0:
                for j in range(width):
                    aug[r, j] ^= byte_mul[factor, aug[rank, j]]
        rank += 1
    return rank


def _reduce_numpy(aug, ncols, byte_mul, inv):
    rows = aug.shape[0]
    rank = 0
    for col in range(ncols):
        if rank == rows:
            break
        nz = np.flatnonzero(aug[rank:, col])
        if nz.size == 0:
            continue
        pivot = rank + int(nz[0])
        if pivot != rank:
            aug[[rank, pivot]] = aug[[pivot, rank]]
        aug[rank] = byte_mul[inv[aug[rank, col]], aug[rank]]
        factors = aug[:, col].copy()
        factors[rank] = 0
        aug ^= byte_mul[factors[:, None], aug[rank][None, :]]
        rank += 1
    return rank


@njit
def reduce_batch_numba(aug, ncols, byte_mul, inv):
    ranks = np.empty(aug.shape[0], dtype=np.int64)
    for t in range(aug.shape[0]):
        ranks[t] = _reduce_numba(aug[t], ncols, byte_mul, inv)
    return ranks


def reduce_batch_numpy(aug, ncols, byte_mul, inv):
    ranks = np.empty(aug.shape[0], dtype=np.int64)
    for t in range(aug.shape[0]):
        ranks[t] = _reduce_numpy(aug[t], ncols, byte_mul, inv)
    return ranks


@njit
def matmul_numba(coeffs, data, byte_mul):
    """``coeffs @ data`` over the field; ``data`` rows are packed byte blocks."""
    count, m = coeffs.shape
    width = data.shape[1]
    out = np.zeros((count, width), dtype=np.uint8)
    for i in range(count):
        for j in range(m):
            c = coeffs[i, j]
            if c != 0:
                for k in range(width):
                    out[i, k] ^= byte_mul[c, data[j, k]]
    return out


def matmul_numpy(coeffs, data, byte_mul):
    out = np.zeros((coeffs.shape[0], data.shape[1]), dtype=np.uint8)
    for j in range(coeffs.shape[1]):
        out ^= byte_mul[coeffs[:, j][:, None], data[j][None, :]]
    return out


reduce_batch = pick(reduce_batch_numba, reduce_batch_numpy)
matmul = pick(matmul_numba, matmul_numpy)
