"""Random linear network coding over GF(2^q)."""

from .codec import (
    CodedPacket,
    DecodeResult,
    DecoderState,
    Generation,
    TrialStats,
    decode,
    encode,
    full_rank_probability,
    rank,
    run_trials,
)
from .field import GaloisField, field_for_size, galois_field, gf_add, gf_inv, gf_mul

__all__ = [
    "CodedPacket",
    "DecodeResult",
    "DecoderState",
    "GaloisField",
    "Generation",
    "TrialStats",
    "decode",
    "encode",
    "field_for_size",
    "full_rank_probability",
    "galois_field",
    "gf_add",
    "gf_inv",
    "gf_mul",
    "rank",
    "run_trials",
]
