"""Paillier encryption with layered (recursive) ciphertexts.

The generator is fixed to n+1, so encryption is m -> (1+mn) * r^n mod n^2
and sigma-protocol responses reduce mod n.

Layered encryption re-encrypts the serialized previous layer.  A base
ciphertext lives in Z_{n^2}; to feed it back into the plaintext space it
is split into two digits of (bit_length - 1) bits each.  Both digits are
below n unconditionally because n has its top bit set.  For the split to
cover the whole ciphertext, every chunk destined for re-encryption is
kept below 2^(2*(bit_length-1)) by resampling its randomness, i.e. the
top two bits of every serialized layer are zero.  This keeps the chunk
count at exactly 2 per layer per digit, so a layer-L ciphertext of a
single-digit payload has 2^(L-1) chunks.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .encoding import fixed_bytes

# Resampling a bounded chunk succeeds with probability > 1/4 per draw;
# hitting this cap means the key material is broken, not bad luck.
_BOUND_RETRY_CAP = 8192

_SMALL_PRIMES = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]


class MalformedCiphertext(ValueError):
    """Raised when a layered ciphertext violates its declared structure."""


@dataclass(frozen=True)
class PaillierPublicKey:
    n: int
    bit_length: int

    def __post_init__(self):
        if self.n <= 3 or self.n % 2 == 0:
            raise ValueError("modulus must be odd and > 3")
        if self.n.bit_length() != self.bit_length:
            raise ValueError("bit_length does not match modulus")

    @property
    def n_sq(self) -> int:
        return self.n * self.n

    @property
    def digit_bits(self) -> int:
        # 2^(bit_length-1) <= n, so a digit of this width is always < n.
        return self.bit_length - 1

    @property
    def chunk_bound(self) -> int:
        return 1 << (2 * self.digit_bits)

    @property
    def ciphertext_bytes(self) -> int:
        return (2 * self.bit_length + 7) // 8

    def fingerprint(self) -> bytes:
        import hashlib

        return hashlib.sha256(self.n.to_bytes((self.bit_length + 7) // 8, "big")).digest()[:16]


@dataclass(frozen=True)
class PaillierSecretKey:
    p: int
    q: int
    lam: int
    mu: int
    public: PaillierPublicKey


def _is_probable_prime(n: int, rng: random.Random, rounds: int = 40) -> bool:
    if n < 2:
        return False
    for sp in _SMALL_PRIMES:
        if n % sp == 0:
            return n == sp
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


def _gen_prime(bits: int, rng: random.Random) -> int:
    while True:
        candidate = rng.getrandbits(bits)
        # top two bits set so that n = p*q keeps its full bit length and
        # exceeds 2^(bits_p + bits_q - 1)
        candidate |= (1 << (bits - 1)) | (1 << (bits - 2)) | 1
        if _is_probable_prime(candidate, rng):
            return candidate


def paillier_keygen(bits: int, rng: random.Random) -> tuple[PaillierPublicKey, PaillierSecretKey]:
    """Generate a key pair with generator n+1.  bits in {512, 1024, 2048}."""
    if bits not in (512, 1024, 2048):
        raise ValueError("key size must be one of 512, 1024, 2048")
    half = bits // 2
    while True:
        p = _gen_prime(half, rng)
        q = _gen_prime(half, rng)
        if p == q:
            continue
        n = p * q
        if n.bit_length() != bits:
            continue
        if math.gcd(n, (p - 1) * (q - 1)) != 1:
            continue
        return _key_from_primes(p, q)


def _key_from_primes(p: int, q: int) -> tuple[PaillierPublicKey, PaillierSecretKey]:
    n = p * q
    lam = math.lcm(p - 1, q - 1)
    mu = pow(lam, -1, n)
    pk = PaillierPublicKey(n=n, bit_length=n.bit_length())
    return pk, PaillierSecretKey(p=p, q=q, lam=lam, mu=mu, public=pk)


def toy_keypair(p: int = 3, q: int = 5) -> tuple[PaillierPublicKey, PaillierSecretKey]:
    """Tiny hand-checkable key pair.  Test use only."""
    return _key_from_primes(p, q)


def random_unit(pk: PaillierPublicKey, rng: random.Random) -> int:
    while True:
        r = rng.randrange(1, pk.n)
        if math.gcd(r, pk.n) == 1:
            return r


def paillier_encrypt(pk: PaillierPublicKey, m: int, r: int) -> int:
    """c = (1+n)^m * r^n mod n^2 with explicit randomness r."""
    if not 0 <= m < pk.n:
        raise ValueError("plaintext out of range")
    if math.gcd(r, pk.n) != 1:
        raise ValueError("randomness must be a unit mod n")
    n, n_sq = pk.n, pk.n_sq
    return ((1 + m * n) % n_sq) * pow(r, n, n_sq) % n_sq


def encrypt(pk: PaillierPublicKey, m: int, rng: random.Random) -> int:
    return paillier_encrypt(pk, m, random_unit(pk, rng))


def paillier_decrypt(sk: PaillierSecretKey, c: int) -> int:
    n = sk.public.n
    u = pow(c, sk.lam, sk.public.n_sq)
    return ((u - 1) // n) * sk.mu % n


def hom_add(pk: PaillierPublicKey, c1: int, c2: int) -> int:
    """Ciphertext of the sum of the two plaintexts."""
    return c1 * c2 % pk.n_sq


def hom_scale(pk: PaillierPublicKey, c: int, k: int) -> int:
    """Ciphertext of k times the plaintext of c."""
    return pow(c, k, pk.n_sq)


def encrypt_bounded(pk: PaillierPublicKey, m: int, rng: random.Random) -> int:
    """Encrypt m, resampling randomness until the chunk bound holds."""
    bound = pk.chunk_bound
    for _ in range(_BOUND_RETRY_CAP):
        c = paillier_encrypt(pk, m, random_unit(pk, rng))
        if c < bound:
            return c
    raise RuntimeError("could not find a bounded ciphertext")


def rerandomize_bounded(pk: PaillierPublicKey, c: int, rng: random.Random) -> int:
    """Multiply in fresh encryptions of 0 until the chunk bound holds."""
    bound = pk.chunk_bound
    for _ in range(_BOUND_RETRY_CAP):
        masked = hom_add(pk, c, paillier_encrypt(pk, 0, random_unit(pk, rng)))
        if masked < bound:
            return masked
    raise RuntimeError("could not rerandomize into the chunk bound")


# ---------------------------------------------------------------------------
# Layered ciphertexts


@dataclass(frozen=True)
class LayeredCiphertext:
    """A recursive encryption: `layer` nestings, stored as base chunks."""

    layer: int
    chunks: tuple[int, ...]

    def __post_init__(self):
        if self.layer < 1:
            raise ValueError("layer must be >= 1")

    def to_bytes(self, pk: PaillierPublicKey) -> bytes:
        if len(self.chunks) > 0xFFFF:
            raise ValueError("too many chunks")
        out = bytearray()
        out.append(self.layer)
        out += len(self.chunks).to_bytes(2, "big")
        width = pk.ciphertext_bytes
        for c in self.chunks:
            out += fixed_bytes(c, width)
        return bytes(out)

    @classmethod
    def from_bytes(cls, pk: PaillierPublicKey, buf: bytes) -> "LayeredCiphertext":
        if len(buf) < 3:
            raise MalformedCiphertext("truncated layered ciphertext")
        layer = buf[0]
        count = int.from_bytes(buf[1:3], "big")
        width = pk.ciphertext_bytes
        if len(buf) != 3 + count * width:
            raise MalformedCiphertext("chunk data does not match declared count")
        chunks = tuple(
            int.from_bytes(buf[3 + i * width : 3 + (i + 1) * width], "big") for i in range(count)
        )
        return cls(layer=layer, chunks=chunks)


@dataclass(frozen=True)
class ZeroString:
    """An all-zero placeholder shaped like a layer-i ciphertext.

    Layer 0 denotes the plain integer 0.
    """

    layer_tag: int
    byte_length: int


def payload_digit_count(pk: PaillierPublicKey, payload_len: int) -> int:
    """Digits needed to carry a payload of `payload_len` bytes."""
    return max(1, -(-8 * payload_len // pk.digit_bits))


def chunk_count(pk: PaillierPublicKey, payload_len: int, layer: int) -> int:
    """Chunks of a layer-`layer` ciphertext over a payload of given width."""
    return payload_digit_count(pk, payload_len) * (1 << (layer - 1))


def zero_string_byte_length(pk: PaillierPublicKey, payload_len: int, layer: int) -> int:
    return 3 + chunk_count(pk, payload_len, layer) * pk.ciphertext_bytes


def payload_to_digits(pk: PaillierPublicKey, payload: bytes, digits: int | None = None) -> list[int]:
    value = int.from_bytes(payload, "big")
    k = digits if digits is not None else payload_digit_count(pk, len(payload))
    base = pk.digit_bits
    out = [0] * k
    for i in range(k - 1, -1, -1):
        out[i] = value & ((1 << base) - 1)
        value >>= base
    if value:
        raise ValueError("payload does not fit the digit count")
    return out


def digits_to_payload(pk: PaillierPublicKey, digits: list[int], payload_len: int) -> bytes:
    value = 0
    for d in digits:
        value = (value << pk.digit_bits) | d
    return value.to_bytes(payload_len, "big")


def chunks_to_digits(pk: PaillierPublicKey, chunks: tuple[int, ...] | list[int]) -> list[int]:
    """Split each bounded chunk into its (hi, lo) digit pair."""
    base = pk.digit_bits
    mask = (1 << base) - 1
    out = []
    for c in chunks:
        out.append(c >> base)
        out.append(c & mask)
    return out


def digits_to_chunks(pk: PaillierPublicKey, digits: list[int]) -> list[int]:
    if len(digits) % 2:
        raise MalformedCiphertext("odd digit count cannot reassemble chunks")
    base = pk.digit_bits
    return [(digits[2 * i] << base) | digits[2 * i + 1] for i in range(len(digits) // 2)]


def _coerce_payload(payload: bytes | int, payload_len: int | None) -> bytes:
    if isinstance(payload, int):
        if payload < 0:
            raise ValueError("payload integers must be non-negative")
        width = payload_len if payload_len is not None else max(1, (payload.bit_length() + 7) // 8)
        return payload.to_bytes(width, "big")
    if payload_len is not None and len(payload) != payload_len:
        raise ValueError("payload width mismatch")
    return payload


def layered_encrypt(
    pk: PaillierPublicKey,
    payload: bytes | int,
    layers: int,
    rng: random.Random,
    payload_len: int | None = None,
) -> LayeredCiphertext:
    """Encrypt a payload `layers` times, re-chunking between layers."""
    if layers < 1:
        raise ValueError("layers must be >= 1")
    data = _coerce_payload(payload, payload_len)
    digits = payload_to_digits(pk, data)
    chunks = [encrypt_bounded(pk, d, rng) for d in digits]
    for _ in range(layers - 1):
        digits = chunks_to_digits(pk, chunks)
        chunks = [encrypt_bounded(pk, d, rng) for d in digits]
    return LayeredCiphertext(layer=layers, chunks=tuple(chunks))


def layered_encrypt_zero_string(
    pk: PaillierPublicKey,
    payload_len: int,
    zero_layer: int,
    total_layers: int,
    rng: random.Random,
) -> LayeredCiphertext:
    """Encrypt the zero string 0_i up to the full response depth.

    Produces E^(d-i)(0_i): a layer-i-shaped block of zero chunks wrapped
    in total_layers - zero_layer further encryptions.
    """
    if not 1 <= zero_layer < total_layers:
        raise ValueError("zero layer must sit strictly inside the response depth")
    chunks = [0] * chunk_count(pk, payload_len, zero_layer)
    for _ in range(total_layers - zero_layer):
        digits = chunks_to_digits(pk, chunks)
        chunks = [encrypt_bounded(pk, d, rng) for d in digits]
    return LayeredCiphertext(layer=total_layers, chunks=tuple(chunks))


def layered_decrypt(
    sk: PaillierSecretKey,
    lc: LayeredCiphertext,
    payload_len: int | None = None,
) -> bytes | int | ZeroString:
    """Peel all layers.

    Returns the innermost payload (bytes when payload_len is given,
    otherwise the integer value), or a ZeroString when a fully-zero layer
    is reached before the payload.
    """
    pk = sk.public
    chunks = list(lc.chunks)
    layer = lc.layer
    expected = len(chunks) >> (layer - 1)
    if expected << (layer - 1) != len(chunks) or expected < 1:
        raise MalformedCiphertext("chunk count inconsistent with declared layer")
    while layer > 0:
        if all(c == 0 for c in chunks):
            k = len(chunks)
            return ZeroString(layer_tag=layer, byte_length=3 + k * pk.ciphertext_bytes)
        digits = [paillier_decrypt(sk, c) for c in chunks]
        layer -= 1
        if layer == 0:
            if payload_len is None:
                value = 0
                for d in digits:
                    value = (value << pk.digit_bits) | d
                return value
            return digits_to_payload(pk, digits, payload_len)
        chunks = digits_to_chunks(pk, digits)
    raise AssertionError("unreachable")
