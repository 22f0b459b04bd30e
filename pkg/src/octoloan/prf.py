"""Keyed PRF used for commitment randomness and per-round secrets.

HMAC-SHA256 in counter mode with rejection sampling onto the target
range.  The same (seed, label, bound) always yields the same output, so
two parties holding the seed derive shared randomness without talking.
"""

from __future__ import annotations

import hmac
import hashlib
import random
from dataclasses import dataclass

from .encoding import encode_bytes, encode_int

SEED_BYTES = 32


@dataclass(frozen=True)
class PrfSeed:
    """32-byte secret.  Never serialized into any protocol message."""

    secret: bytes

    def __post_init__(self):
        if len(self.secret) != SEED_BYTES:
            raise ValueError("seed must be 32 bytes")

    def __repr__(self):  # keep secrets out of logs
        return "PrfSeed(<hidden>)"


def new_seed(rng: random.Random) -> PrfSeed:
    return PrfSeed(rng.getrandbits(8 * SEED_BYTES).to_bytes(SEED_BYTES, "big"))


def prf_label(*parts: bytes | str | int) -> bytes:
    """Unambiguous label from mixed parts (each length-framed)."""
    out = bytearray()
    for part in parts:
        if isinstance(part, str):
            part = part.encode("utf-8")
        if isinstance(part, int):
            out += encode_int(part)
        else:
            out += encode_bytes(part)
    return bytes(out)


def prf_eval(seed: PrfSeed, label: bytes, bound: int) -> int:
    """Deterministic output uniform in [0, bound) via rejection sampling."""
    if not label:
        raise ValueError("label must be non-empty")
    if bound < 1:
        raise ValueError("bound must be positive")
    if bound == 1:
        return 0
    bits = (bound - 1).bit_length()
    nbytes = (bits + 7) // 8
    counter = 0
    while True:
        stream = b""
        block = 0
        while len(stream) < nbytes:
            msg = label + counter.to_bytes(8, "big") + block.to_bytes(4, "big")
            stream += hmac.new(seed.secret, msg, hashlib.sha256).digest()
            block += 1
        value = int.from_bytes(stream[:nbytes], "big")
        value &= (1 << bits) - 1
        if value < bound:
            return value
        counter += 1


def prf_unit(seed: PrfSeed, label: bytes, modulus: int) -> int:
    """Deterministic unit mod `modulus` (for encryption randomness)."""
    import math

    counter = 0
    while True:
        r = prf_eval(seed, label + encode_int(counter), modulus - 1) + 1
        if math.gcd(r, modulus) == 1:
            return r
        counter += 1
