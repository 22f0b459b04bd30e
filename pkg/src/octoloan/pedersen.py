"""Pedersen commitments over a prime-order subgroup of Z_p*.

F(x, r) = g^x * h^r mod p, additively homomorphic in (x, r) mod q.
h is derived from g by hashing into the subgroup, so no party knows
log_g(h).
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .encoding import encode_int
from .paillier import _is_probable_prime


@dataclass(frozen=True)
class PedersenParams:
    p: int
    q: int
    g: int
    h: int

    def __post_init__(self):
        if (self.p - 1) % self.q != 0:
            raise ValueError("q must divide p-1")
        for gen in (self.g, self.h):
            if gen in (0, 1) or pow(gen, self.q, self.p) != 1:
                raise ValueError("generators must have order q")

    @property
    def element_bytes(self) -> int:
        return (self.p.bit_length() + 7) // 8

    def is_group_element(self, value: int) -> bool:
        return 1 <= value < self.p and pow(value, self.q, self.p) == 1


# Hand-checkable toy group (23 = 2*11 + 1).  Test use only.
TOY_PARAMS = PedersenParams(p=23, q=11, g=4, h=9)


def _derive_h(p: int, q: int, g: int) -> int:
    cofactor = (p - 1) // q
    counter = 0
    while True:
        digest = hashlib.sha256(b"octoloan/pedersen-h" + encode_int(g) + encode_int(counter)).digest()
        candidate = pow(int.from_bytes(digest, "big") % p, cofactor, p)
        if candidate not in (0, 1, g):
            return candidate
        counter += 1


def generate_params(rng: random.Random, q_bits: int = 160, p_bits: int = 256) -> PedersenParams:
    """Sample q, then search for p = k*q + 1 of the requested size."""
    while True:
        q = rng.getrandbits(q_bits) | (1 << (q_bits - 1)) | 1
        if not _is_probable_prime(q, rng):
            continue
        for _ in range(4096):
            k = rng.getrandbits(p_bits - q_bits)
            if k % 2:
                k += 1
            p = k * q + 1
            if p.bit_length() != p_bits or not _is_probable_prime(p, rng):
                continue
            cofactor = (p - 1) // q
            while True:
                g = pow(rng.randrange(2, p - 1), cofactor, p)
                if g != 1:
                    break
            return PedersenParams(p=p, q=q, g=g, h=_derive_h(p, q, g))


def pedersen_commit(params: PedersenParams, x: int, r: int) -> int:
    """g^x * h^r mod p."""
    if not (0 <= x < params.q and 0 <= r < params.q):
        raise ValueError("value and randomness must be in [0, q)")
    return pow(params.g, x, params.p) * pow(params.h, r, params.p) % params.p


def pedersen_verify_open(params: PedersenParams, commitment: int, x: int, r: int) -> bool:
    if not (0 <= x < params.q and 0 <= r < params.q):
        return False
    return commitment == pedersen_commit(params, x, r)
