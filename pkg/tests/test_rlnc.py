import hashlib
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fogalloc.model import DomainError
from fogalloc.rlnc import (
    CodedPacket, DecoderState, Generation, decode, encode, field_for_size, full_rank_probability,
    galois_field, gf_add, gf_inv, gf_mul, rank, run_trials,
)
from fogalloc.rlnc import _elim

DATA = Path(__file__).parent / "data"


def poly_mul_mod(a, b, modulus):
    """Bit-level oracle: full carry-less product, then polynomial long division."""
    prod = 0
    for i in range(b.bit_length()):
        if (b >> i) & 1:
            prod ^= a << i
    deg = modulus.bit_length() - 1
    while prod.bit_length() - 1 >= deg:
        prod ^= modulus << (prod.bit_length() - 1 - deg)
    return prod


GF256 = galois_field(8)
GF16 = galois_field(4)
GF2 = galois_field(1)


def test_aes_inverse_pair():
    assert poly_mul_mod(0x53, 0xCA, 0x11B) == 0x01
    assert gf_mul(0x53, 0xCA) == 0x01
    candidates = [x for x in range(1, 256) if poly_mul_mod(0x53, x, 0x11B) == 1]
    assert candidates == [0xCA] == [gf_inv(0x53)]


@pytest.mark.parametrize("q, modulus", [(1, 0b11), (4, 0x13), (8, 0x11B)])
def test_tables_match_oracle(q, modulus):
    field = galois_field(q)
    n = field.order
    for x in range(n):
        assert gf_mul(x, 1, field) == x
        assert gf_mul(x, 0, field) == 0
    pairs = [(x, y) for x in range(n) for y in range(n)]
    if q == 8:
        pairs = pairs[::7]
    for x, y in pairs:
        assert field.mul_table[x, y] == poly_mul_mod(x, y, modulus)


@pytest.mark.parametrize("q", [1, 4, 8])
def test_inverse_exhaustive(q):
    field = galois_field(q)
    assert gf_inv(1, field) == 1
    for x in range(1, field.order):
        inv = gf_inv(x, field)
        assert gf_mul(x, inv, field) == 1
    with pytest.raises(DomainError, match="zero has no inverse"):
        gf_inv(0, field)


def test_out_of_range_elements():
    with pytest.raises(DomainError):
        gf_mul(16, 1, GF16)
    assert gf_add(0x53, 0xCA) == 0x53 ^ 0xCA


def test_field_axioms_exhaustive_gf16():
    m = GF16.mul_table.astype(np.int64)
    x = np.arange(16)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    np.testing.assert_array_equal(m, m.T)
    np.testing.assert_array_equal(m[m[X, Y], Z], m[X, m[Y, Z]])
    np.testing.assert_array_equal(m[X, Y ^ Z], m[X, Y] ^ m[X, Z])


def test_field_axioms_sampled_gf256():
    rng = np.random.default_rng(1)
    x, y, z = rng.integers(0, 256, (3, 200_000))
    m = GF256.mul_table.astype(np.int64)
    np.testing.assert_array_equal(m[x, y], m[y, x])
    np.testing.assert_array_equal(m[m[x, y], z], m[x, m[y, z]])
    np.testing.assert_array_equal(m[x, y ^ z], m[x, y] ^ m[x, z])


def test_generator_is_primitive():
    for q in (1, 4, 8):
        field = galois_field(q)
        powers = {int(field.exp[i]) for i in range(field.order - 1)}
        assert powers == set(range(1, field.order))


@pytest.mark.parametrize("q", [1, 4, 8])
def test_byte_mul_multiplies_each_symbol(q):
    field = galois_field(q)
    per = 8 // q
    mask = field.order - 1
    for c in range(field.order):
        for byte in range(0, 256, 5):
            expected = 0
            for s in range(per):
                sym = (byte >> (s * q)) & mask
                expected |= poly_mul_mod(c, sym, field.poly) << (s * q)
            assert field.byte_mul[c, byte] == expected


def test_field_for_size():
    assert field_for_size(256) is GF256
    assert field_for_size(2).q == 1
    with pytest.raises(DomainError):
        field_for_size(8)


def _gen(m, size, seed=0, field=GF256):
    return Generation.random(m, size, np.random.default_rng(seed), field)


def test_systematic_packets_are_sources():
    gen = _gen(5, 12)
    coded = encode(gen, 5, np.random.default_rng(3), systematic=True)
    for i, pkt in enumerate(coded):
        np.testing.assert_array_equal(pkt.coefficients, np.eye(5, dtype=np.uint8)[i])
        np.testing.assert_array_equal(pkt.payload, gen.packets[i])


@pytest.mark.parametrize("field", [GF2, GF16, GF256])
def test_single_packet_generation(field):
    gen = _gen(1, 16, field=field)
    for pkt in encode(gen, 20, np.random.default_rng(4)):
        c = int(pkt.coefficients[0])
        np.testing.assert_array_equal(pkt.payload, field.byte_mul[c, gen.packets[0]])


def test_payload_is_field_combination():
    gen = _gen(4, 6)
    for pkt in encode(gen, 10, np.random.default_rng(5)):
        expected = []
        for col in range(6):
            acc = 0
            for j in range(4):
                acc ^= poly_mul_mod(int(pkt.coefficients[j]), int(gen.packets[j, col]), 0x11B)
            expected.append(acc)
        assert pkt.payload.tolist() == expected


def test_encoding_is_linear():
    g1, g2 = _gen(6, 10, seed=1), _gen(6, 10, seed=2)
    summed = Generation(g1.packets ^ g2.packets, GF256)
    e1 = encode(g1, 8, np.random.default_rng(9))
    e2 = encode(g2, 8, np.random.default_rng(9))
    e3 = encode(summed, 8, np.random.default_rng(9))
    for p1, p2, p3 in zip(e1, e2, e3):
        np.testing.assert_array_equal(p1.coefficients, p3.coefficients)
        np.testing.assert_array_equal(p1.payload ^ p2.payload, p3.payload)


def _golden_bytes():
    gen = Generation.random(16, 32, np.random.default_rng(np.random.SeedSequence(1234, spawn_key=(0,))))
    coded = encode(gen, 20, np.random.default_rng(np.random.SeedSequence(1234, spawn_key=(1,))))
    return b"".join(p.to_bytes() for p in coded)


def test_golden_encoding():
    blob = _golden_bytes()
    assert blob == _golden_bytes()
    golden = (DATA / "encode_m16_q8.bin").read_bytes()
    assert blob == golden
    assert hashlib.sha256(blob).hexdigest() == (DATA / "encode_m16_q8.sha256").read_text().split()[0]


def test_decode_roundtrip_in_any_order():
    gen = _gen(16, 40)
    coded = encode(gen, 24, np.random.default_rng(6))
    order = np.random.default_rng(7).permutation(len(coded))
    result = decode([coded[i] for i in order], 16)
    assert result.success and result.rank == 16
    assert result.generation == gen


def test_identical_packets_give_rank_one():
    gen = _gen(5, 8)
    pkt = encode(gen, 1, np.random.default_rng(8))[0]
    result = decode([pkt] * 5, 5)
    assert result.rank == 1 and not result.success and result.generation is None


def test_decode_dimension_checks():
    gen = _gen(3, 4)
    pkts = encode(gen, 3, np.random.default_rng(0))
    other = encode(_gen(4, 4), 1, np.random.default_rng(0))[0]
    with pytest.raises(DomainError):
        decode(pkts + [other], 3)
    assert decode([], 3).rank == 0


def test_rank_examples():
    assert rank(np.zeros((4, 4), dtype=np.uint8)) == 0
    assert rank(np.eye(7, dtype=np.uint8)) == 7
    assert rank([[1, 2], [2, 4]], GF256) == 1 + (gf_mul(2, 2) != 4)
    assert rank([[1, 1], [1, 1]], GF2) == 1
    with pytest.raises(DomainError):
        rank([[2]], GF2)


def test_random_tall_matrix_rank():
    rng = np.random.default_rng(12)
    m = 6
    full = sum(rank(rng.integers(0, 256, (2 * m, m)), GF256) == m for _ in range(2000))
    assert full / 2000 >= full_rank_probability(m, 8) - 0.005


@pytest.mark.parametrize("q", [1, 4, 8])
def test_rank_grows_one_step_at_a_time(q):
    field = galois_field(q)
    gen = _gen(10, 6, field=field)
    state = DecoderState(10, 6, field)
    previous = 0
    for pkt in encode(gen, 40, np.random.default_rng(q)):
        raised = state.add(pkt)
        assert state.rank - previous == int(raised) and state.rank >= previous
        previous = state.rank
    if state.complete:
        assert state.generation() == gen
    else:
        with pytest.raises(DomainError):
            state.generation()


def test_exactly_m_independent_packets_suffice():
    gen = _gen(8, 16)
    coded = encode(gen, 8, np.random.default_rng(21))
    coeffs = np.stack([p.coefficients for p in coded])
    assert rank(coeffs) == 8
    assert decode(coded, 8).generation == gen


def _invertible(rng, m, field):
    while True:
        mat = rng.integers(0, field.order, (m, m), dtype=np.uint8)
        if rank(mat, field) == m:
            return mat


@settings(max_examples=60)
@given(st.integers(1, 12), st.integers(1, 24), st.sampled_from([1, 4, 8]), st.integers(0, 2**32 - 1))
def test_invertible_matrices_decode(m, size, q, seed):
    field = galois_field(q)
    rng = np.random.default_rng(seed)
    gen = Generation.random(m, size, rng, field)
    coeffs = _invertible(rng, m, field)
    payloads = _elim.matmul(coeffs, np.ascontiguousarray(gen.packets), field.byte_mul)
    packets = [CodedPacket(c, p, field) for c, p in zip(coeffs, payloads)]
    result = decode(packets, m, field)
    assert result.success and result.generation == gen


@given(st.sampled_from([1, 4, 8]), st.integers(1, 40), st.integers(0, 30), st.integers(0, 2**32 - 1))
def test_wire_roundtrip(q, m, size, seed):
    field = galois_field(q)
    rng = np.random.default_rng(seed)
    pkt = CodedPacket(rng.integers(0, field.order, m, dtype=np.uint8),
                      rng.integers(0, 256, size, dtype=np.uint8), field)
    blob = pkt.to_bytes()
    assert len(blob) == 3 + math.ceil(m * q / 8) + size
    assert blob[:3] == m.to_bytes(2, "big") + bytes([q])
    back = CodedPacket.from_bytes(blob)
    assert back.field.q == q
    np.testing.assert_array_equal(back.coefficients, pkt.coefficients)
    np.testing.assert_array_equal(back.payload, pkt.payload)


def test_wire_nibble_order():
    pkt = CodedPacket(np.array([0xA, 0x3, 0x7], dtype=np.uint8), np.array([9], dtype=np.uint8), GF16)
    assert pkt.to_bytes() == bytes([0, 3, 4, 0xA3, 0x70, 9])
    with pytest.raises(DomainError):
        CodedPacket.from_bytes(bytes([0, 3, 4, 0xA3]))


def test_generation_from_bytes_pads():
    gen = Generation.from_bytes(b"abcdefg", 3)
    assert gen.size == 3 and gen.packets[-1].tolist() == [ord("g"), 0, 0]
    with pytest.raises(DomainError):
        encode(gen, 0, np.random.default_rng(0))


def test_full_rank_probability_formula():
    assert full_rank_probability(16, 8) == pytest.approx(math.prod(1 - 256.0 ** -i for i in range(1, 17)))
    assert full_rank_probability(16, 8) == pytest.approx(0.99608, abs=5e-6)
    assert full_rank_probability(8, 1) == pytest.approx(0.2899, abs=1e-4)
    assert full_rank_probability(1, 4) == pytest.approx(1 - 1 / 16)
    assert full_rank_probability(4, 8, extra=2) > full_rank_probability(4, 8)


def test_monte_carlo_matches_formula_m16():
    stats = run_trials(16, GF256, 10_000, np.random.default_rng(np.random.SeedSequence(0, spawn_key=(16,))))
    assert abs(stats.rate - full_rank_probability(16, 8)) <= 0.005
    assert stats.verified == stats.full_rank
