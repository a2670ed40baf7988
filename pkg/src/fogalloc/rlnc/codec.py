"""Random linear network coding of one generation.

Payload bytes are vectors of q-bit symbols (8/q symbols per byte) and every
coded packet is a random field-linear combination of the source packets.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from ..model import DomainError
from . import _elim
from .field import GaloisField, galois_field

_HEADER = struct.Struct(">HB")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.uint8)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Generation:
    """``M`` source packets of equal length, shape ``(M, packet_size_bytes)``."""

    packets: np.ndarray
    field: GaloisField

    def __post_init__(self):
        arr = _frozen(self.packets)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DomainError("a generation needs at least one non-empty packet")
        object.__setattr__(self, "packets", arr)

    @property
    def size(self) -> int:
        return self.packets.shape[0]

    @property
    def packet_size_bytes(self) -> int:
        return self.packets.shape[1]

    @classmethod
    def from_bytes(cls, data: bytes, packet_size: int, field: GaloisField | None = None) -> "Generation":
        """Split ``data`` into packets, zero-padding the last one."""
        if packet_size < 1 or not data:
            raise DomainError("need a positive packet size and non-empty data")
        m = math.ceil(len(data) / packet_size)
        buf = np.zeros(m * packet_size, dtype=np.uint8)
        buf[: len(data)] = np.frombuffer(data, dtype=np.uint8)
        return cls(buf.reshape(m, packet_size), field or galois_field(8))

    @classmethod
    def random(cls, m: int, packet_size: int, rng: np.random.Generator,
               field: GaloisField | None = None) -> "Generation":
        if m < 1 or packet_size < 1:
            raise DomainError("generation size and packet size must be positive")
        data = rng.integers(0, 256, size=(m, packet_size), dtype=np.uint8)
        return cls(data, field or galois_field(8))

    def __eq__(self, other):
        if not isinstance(other, Generation):
            return NotImplemented
        return self.field.q == other.field.q and np.array_equal(self.packets, other.packets)


def pack_symbols(values: np.ndarray, q: int) -> bytes:
    """Pack field elements, high-order symbol first, padding the last byte with zeros."""
    values = np.asarray(values, dtype=np.uint8)
    if q == 8:
        return values.tobytes()
    if q == 1:
        return np.packbits(values).tobytes()
    padded = np.zeros(2 * math.ceil(values.size / 2), dtype=np.uint8)
    padded[: values.size] = values
    return ((padded[0::2] << 4) | padded[1::2]).tobytes()


def unpack_symbols(data: bytes, count: int, q: int) -> np.ndarray:
    raw = np.frombuffer(data, dtype=np.uint8)
    if q == 8:
        out = raw
    elif q == 1:
        out = np.unpackbits(raw)
    else:
        out = np.empty(2 * raw.size, dtype=np.uint8)
        out[0::2] = raw >> 4
        out[1::2] = raw & 0x0F
    return out[:count].copy()


def packed_length(count: int, q: int) -> int:
    return math.ceil(count * q / 8)


@dataclass(frozen=True, eq=False)
class CodedPacket:
    coefficients: np.ndarray
    payload: np.ndarray
    field: GaloisField

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _frozen(self.coefficients))
        object.__setattr__(self, "payload", _frozen(self.payload))
        if np.any(self.coefficients >= self.field.order):
            raise DomainError(f"coefficient outside GF(2^{self.field.q})")

    def to_bytes(self) -> bytes:
        """Wire format: ``>H`` generation size, ``B`` q, packed coefficients, payload."""
        m = self.coefficients.size
        return _HEADER.pack(m, self.field.q) + pack_symbols(self.coefficients, self.field.q) + self.payload.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "CodedPacket":
        if len(data) < _HEADER.size:
            raise DomainError("truncated packet header")
        m, q = _HEADER.unpack_from(data)
        field = galois_field(q)
        start = _HEADER.size
        end = start + packed_length(m, q)
        if m < 1 or len(data) < end:
            raise DomainError("truncated coding vector")
        coeffs = unpack_symbols(data[start:end], m, q)
        return cls(coeffs, np.frombuffer(data[end:], dtype=np.uint8), field)


def encode(generation: Generation, count: int, rng: np.random.Generator,
           systematic: bool = False) -> list[CodedPacket]:
    """Draw ``count`` coded packets with uniform coefficients from ``rng``.

    With ``systematic`` the first ``min(count, M)`` coding vectors are the unit
    vectors, so those packets carry the source packets verbatim.
    """
    if count < 1:
        raise DomainError("count must be positive")
    field = generation.field
    m = generation.size
    coeffs = rng.integers(0, field.order, size=(count, m), dtype=np.uint8)
    if systematic:
        k = min(count, m)
        coeffs[:k] = np.eye(m, dtype=np.uint8)[:k]
    payloads = _elim.matmul(coeffs, np.ascontiguousarray(generation.packets), field.byte_mul)
    return [CodedPacket(c, p, field) for c, p in zip(coeffs, payloads)]


class DecoderState:
    """Online Gauss-Jordan decoder: packets may arrive in any order."""

    def __init__(self, size: int, packet_size: int, field: GaloisField | None = None):
        if size < 1 or packet_size < 1:
            raise DomainError("generation size and packet size must be positive")
        self.size = size
        self.packet_size = packet_size
        self.field = field or galois_field(8)
        # pivot column -> reduced row [coefficients | payload]
        self._rows: dict[int, np.ndarray] = {}

    @property
    def rank(self) -> int:
        return len(self._rows)

    @property
    def complete(self) -> bool:
        return self.rank == self.size

    def add(self, packet: CodedPacket) -> bool:
        """Absorb one packet; True if it raised the rank."""
        if packet.coefficients.size != self.size or packet.payload.size != self.packet_size:
            raise DomainError(
                f"packet shape ({packet.coefficients.size}, {packet.payload.size}) does not match "
                f"decoder ({self.size}, {self.packet_size})"
            )
        if packet.field.q != self.field.q:
            raise DomainError("packet field differs from decoder field")
        mul = self.field.byte_mul
        row = np.concatenate([packet.coefficients, packet.payload])
        for col, pivot_row in self._rows.items():
            if row[col]:
                row ^= mul[row[col], pivot_row]
        nz = np.flatnonzero(row[: self.size])
        if nz.size == 0:
            return False
        col = int(nz[0])
        row = mul[self.field.inv_table[row[col]], row]
        for other in self._rows.values():
            if other[col]:
                other ^= mul[other[col], row]
        self._rows[col] = row
        return True

    def generation(self) -> Generation:
        if not self.complete:
            raise DomainError(f"rank {self.rank} < {self.size}: cannot decode yet")
        data = np.stack([self._rows[c][self.size:] for c in range(self.size)])
        return Generation(data, self.field)


class DecodeResult(NamedTuple):
    rank: int
    generation: Generation | None

    @property
    def success(self) -> bool:
        return self.generation is not None


def decode(packets: Iterable[CodedPacket], size: int, field: GaloisField | None = None) -> DecodeResult:
    """Recover a generation of ``size`` packets if the coding vectors have full rank."""
    packets = list(packets)
    field = field or galois_field(8)
    if not packets:
        return DecodeResult(0, None)
    width = packets[0].payload.size
    if any(p.coefficients.size != size or p.payload.size != width for p in packets):
        raise DomainError("inconsistent packet dimensions")
    state = DecoderState(size, width, field)
    for p in packets:
        state.add(p)
        if state.complete:
            return DecodeResult(size, state.generation())
    return DecodeResult(state.rank, None)


def rank(matrix, field: GaloisField | None = None) -> int:
    field = field or galois_field(8)
    arr = np.array(matrix, dtype=np.uint8, ndmin=2)
    if arr.size == 0:
        return 0
    if np.any(arr >= field.order):
        raise DomainError(f"matrix entry outside GF(2^{field.q})")
    return int(_elim.reduce_batch(arr[None].copy(), arr.shape[1], field.byte_mul, field.inv_table)[0])


def full_rank_probability(size: int, q: int, extra: int = 0) -> float:
    """Chance that ``size + extra`` uniform coding vectors span GF(2^q)^size."""
    base = 2.0 ** q
    return math.prod(1.0 - base ** -(i) for i in range(extra + 1, extra + size + 1))


class TrialStats(NamedTuple):
    trials: int
    full_rank: int
    verified: int

    @property
    def rate(self) -> float:
        return self.full_rank / self.trials


def run_trials(size: int, field: GaloisField, trials: int, rng: np.random.Generator,
               extra: int = 0, packet_size: int = 8) -> TrialStats:
    """Monte Carlo encode/decode: full-rank count and byte-exact recoveries."""
    if trials < 1 or size < 1 or extra < 0 or packet_size < 1:
        raise DomainError("trials, size and packet_size must be positive; extra non-negative")
    rows = size + extra
    sources = rng.integers(0, 256, size=(trials, size, packet_size), dtype=np.uint8)
    coeffs = rng.integers(0, field.order, size=(trials, rows, size), dtype=np.uint8)
    aug = np.empty((trials, rows, size + packet_size), dtype=np.uint8)
    aug[:, :, :size] = coeffs
    for t in range(trials):
        aug[t, :, size:] = _elim.matmul(coeffs[t], sources[t], field.byte_mul)
    ranks = _elim.reduce_batch(aug, size, field.byte_mul, field.inv_table)
    ok = ranks == size
    recovered = aug[:, :size, size:]
    verified = int(np.sum(ok & np.all(recovered == sources, axis=(1, 2))))
    return TrialStats(trials, int(ok.sum()), verified)

