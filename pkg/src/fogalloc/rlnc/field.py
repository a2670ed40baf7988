"""Binary extension fields GF(2^q) for q in {1, 4, 8}, table driven."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from ..model import DomainError

# reduction polynomials, bit i = coefficient of x^i
POLYNOMIALS = {1: 0b11, 4: 0b1_0011, 8: 0x11B}


def clmul_mod(a: int, b: int, q: int, poly: int) -> int:
    """Shift-and-add product of two field elements, reduced by ``poly``."""
    result = 0
    top = 1 << q
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= poly
    return result


@dataclass(frozen=True, eq=False)
class GaloisField:
    q: int
    poly: int
    generator: int
    exp: np.ndarray
    log: np.ndarray
    mul_table: np.ndarray
    inv_table: np.ndarray
    # byte_mul[c, x]: every q-bit symbol packed in byte x multiplied by c
    byte_mul: np.ndarray

    @property
    def order(self) -> int:
        return 1 << self.q

    def __repr__(self) -> str:
        return f"GaloisField(q={self.q}, poly={self.poly:#x})"


def _find_generator(q: int, poly: int) -> tuple[int, list[int]]:
    order = 1 << q
    for g in range(1, order):
        powers = [1]
        x = g
        while x != 1:
            powers.append(x)
            x = clmul_mod(x, g, q, poly)
        if len(powers) == order - 1:
            return g, powers
    # no element generates the multiplicative group: poly is reducible
    raise ValueError(f"polynomial {poly:#x} does not define GF(2^{q})")


@functools.cache
def galois_field(q: int = 8) -> GaloisField:
    if q not in POLYNOMIALS:
        raise DomainError(f"unsupported field exponent q={q}; choose from {sorted(POLYNOMIALS)}")
    poly = POLYNOMIALS[q]
    order = 1 << q
    generator, powers = _find_generator(q, poly)

    exp = np.array(powers * 2, dtype=np.uint8)
    log = np.zeros(order, dtype=np.int64)
    for i, x in enumerate(powers):
        log[x] = i

    mul = np.zeros((order, order), dtype=np.uint8)
    nz = np.arange(1, order)
    mul[1:, 1:] = exp[(log[nz][:, None] + log[nz][None, :]) % (order - 1)]
    inv = np.zeros(order, dtype=np.uint8)
    inv[1:] = exp[(order - 1 - log[nz]) % (order - 1)]

    byte_mul = np.zeros((order, 256), dtype=np.uint8)
    mask = order - 1
    symbols = np.arange(256)
    for shift in range(0, 8, q):
        part = (symbols >> shift) & mask
        byte_mul |= (mul[:, part].astype(np.int64) << shift).astype(np.uint8)

    for arr in (exp, log, mul, inv, byte_mul):
        arr.flags.writeable = False
    return GaloisField(q, poly, generator, exp, log, mul, inv, byte_mul)


def field_for_size(size: int) -> GaloisField:
    """Field by element count (2, 16 or 256)."""
    q = {2: 1, 16: 4, 256: 8}.get(size)
    if q is None:
        raise DomainError(f"unsupported field size {size}; choose 2, 16 or 256")
    return galois_field(q)


def _check(x: int, field: GaloisField) -> int:
    x = int(x)
    if not 0 <= x < field.order:
        raise DomainError(f"{x} is not an element of GF(2^{field.q})")
    return x


def gf_mul(a: int, b: int, field: GaloisField | None = None) -> int:
    field = field or galois_field(8)
    return int(field.mul_table[_check(a, field), _check(b, field)])


def gf_inv(a: int, field: GaloisField | None = None) -> int:
    field = field or galois_field(8)
    if _check(a, field) == 0:
        raise DomainError("zero has no inverse")
    return int(field.inv_table[a])


def gf_add(a: int, b: int, field: GaloisField | None = None) -> int:
    field = field or galois_field(8)
    return _check(a, field) ^ _check(b, field)
