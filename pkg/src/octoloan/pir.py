"""Recursive PIR with a sparsity-aware responder.

The responder folds a d-dimensional one-hot query over a sparse table of
committed payloads, skipping absent slots.  Empty slots are materialized
as plain zero strings when the fold reaches the replace iteration s, so
a response decrypts to one of:

  - the selected payload (a commitment record),       "type 0"
  - an all-zero block at some inner layer i,          "type i"  (0_i)
  - the full-depth integer 0,                         "deep zero"

Replacement timing: absent cells of the layer-(s-1) array are filled
with zero items before fold s runs, so folds past s-1 never skip and a
record can only influence targets that share its trailing coordinates
k_s..k_d.  The one exception is a completely empty table queried with
s = d, which yields EmptySentinel; the lender substitutes a fresh
full-depth encryption of 0 for it on the wire.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import paillier as pai
from .encoding import fixed_bytes
from .paillier import LayeredCiphertext, PaillierPublicKey, PaillierSecretKey, ZeroString


class ShapeMismatch(ValueError):
    """Query shape and database capacity disagree."""


class MalformedResponse(ValueError):
    """Response decrypts to neither a payload, a zero string, nor deep zero."""


# ---------------------------------------------------------------------------
# Response taxonomy


@dataclass(frozen=True)
class ResponseType:
    kind: str  # "commitment" | "zero-string" | "deep-zero"
    layer: int = 0

    def __str__(self):
        if self.kind == "zero-string":
            return f"type{self.layer}"
        return {"commitment": "type0", "deep-zero": "deep-zero"}[self.kind]


TYPE0 = ResponseType("commitment")
TYPED = ResponseType("deep-zero")


def type_i(layer: int) -> ResponseType:
    if layer < 1:
        raise ValueError("zero-string layers start at 1")
    return ResponseType("zero-string", layer)


class EmptySentinel:
    """Marker for the all-empty table at s = d (never sent on the wire)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EmptySentinel"


EMPTY = EmptySentinel()


def reachable_types(d: int, s: int) -> frozenset[ResponseType]:
    """Tags the exchanger must cover with noise for dimension d, iteration s."""
    if not 1 <= s <= d:
        raise ValueError("replace iteration must be in [1, d]")
    tags = {TYPE0, TYPED}
    for i in range(1, min(s, d - 1) + 1):
        tags.add(type_i(i))
    return frozenset(tags)


# ---------------------------------------------------------------------------
# Shapes and queries


@dataclass(frozen=True)
class QueryShape:
    dims: tuple[int, ...]

    def __post_init__(self):
        if not self.dims or any(m < 2 for m in self.dims):
            raise ValueError("every dimension must be >= 2")

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def capacity(self) -> int:
        out = 1
        for m in self.dims:
            out *= m
        return out

    def to_bytes(self) -> bytes:
        out = bytearray([self.d])
        for m in self.dims:
            out += m.to_bytes(4, "big")
        return bytes(out)

    @classmethod
    def from_bytes(cls, buf: bytes, offset: int = 0) -> tuple["QueryShape", int]:
        d = buf[offset]
        offset += 1
        dims = []
        for _ in range(d):
            dims.append(int.from_bytes(buf[offset : offset + 4], "big"))
            offset += 4
        return cls(tuple(dims)), offset


def pid_to_coords(shape: QueryShape, pid: int) -> list[int]:
    """Mixed-radix split, dimension 1 most significant."""
    if not 0 <= pid < shape.capacity:
        raise ValueError("pid out of range")
    coords = []
    rest = shape.capacity
    for m in shape.dims:
        rest //= m
        coords.append(pid // rest)
        pid %= rest
    return coords


def coords_to_pid(shape: QueryShape, coords: list[int] | tuple[int, ...]) -> int:
    if len(coords) != shape.d:
        raise ValueError("coordinate count mismatch")
    pid = 0
    for k, m in zip(coords, shape.dims):
        if not 0 <= k < m:
            raise ValueError("coordinate out of range")
        pid = pid * m + k
    return pid


@dataclass(frozen=True)
class PirQuery:
    shape: QueryShape
    subqueries: tuple[tuple[int, ...], ...]
    pk: PaillierPublicKey

    def __post_init__(self):
        if len(self.subqueries) != self.shape.d:
            raise ValueError("one subquery per dimension required")
        for sub, m in zip(self.subqueries, self.shape.dims):
            if len(sub) != m:
                raise ValueError("subquery length must match its dimension")

    def to_bytes(self) -> bytes:
        out = bytearray(self.shape.to_bytes())
        width = self.pk.ciphertext_bytes
        for sub in self.subqueries:
            out += len(sub).to_bytes(2, "big")
            for c in sub:
                out += fixed_bytes(c, width)
        return bytes(out)

    @classmethod
    def from_bytes(cls, pk: PaillierPublicKey, buf: bytes) -> "PirQuery":
        shape, offset = QueryShape.from_bytes(buf)
        width = pk.ciphertext_bytes
        subs = []
        for _ in range(shape.d):
            count = int.from_bytes(buf[offset : offset + 2], "big")
            offset += 2
            sub = tuple(
                int.from_bytes(buf[offset + i * width : offset + (i + 1) * width], "big")
                for i in range(count)
            )
            offset += count * width
            subs.append(sub)
        return cls(shape=shape, subqueries=tuple(subs), pk=pk)


def query_frame_bytes(shape: QueryShape) -> int:
    """Wire overhead of a serialized query beyond the raw ciphertexts."""
    return 1 + 4 * shape.d + 2 * shape.d


@dataclass(frozen=True)
class QueryWitness:
    """Prover-side plaintext bits and randomness for every query slot."""

    pid: int
    bits: tuple[tuple[int, ...], ...]
    rands: tuple[tuple[int, ...], ...]


def gen_query(
    pk: PaillierPublicKey, shape: QueryShape, pid: int, rng: random.Random
) -> tuple[PirQuery, QueryWitness]:
    """One-hot encrypted subquery per dimension, fresh randomness per slot."""
    coords = pid_to_coords(shape, pid)
    subs, bits, rands = [], [], []
    for k, m in zip(coords, shape.dims):
        row_bits = tuple(1 if j == k else 0 for j in range(m))
        row_rands = tuple(pai.random_unit(pk, rng) for _ in range(m))
        subs.append(tuple(pai.paillier_encrypt(pk, b, r) for b, r in zip(row_bits, row_rands)))
        bits.append(row_bits)
        rands.append(row_rands)
    query = PirQuery(shape=shape, subqueries=tuple(subs), pk=pk)
    return query, QueryWitness(pid=pid, bits=tuple(bits), rands=tuple(rands))


# ---------------------------------------------------------------------------
# Databases


@dataclass
class SparseDatabase:
    """pid -> payload lookup table for one group at one lender."""

    capacity: int
    payload_len: int
    entries: dict[int, bytes] = field(default_factory=dict)
    shape: QueryShape | None = None

    def __post_init__(self):
        for pid, payload in self.entries.items():
            self._check_entry(pid, payload)

    def _check_entry(self, pid: int, payload: bytes):
        if not 0 <= pid < self.capacity:
            raise ValueError("pid out of range")
        if len(payload) != self.payload_len:
            raise ValueError("payload width must be uniform")

    def put(self, pid: int, payload: bytes):
        self._check_entry(pid, payload)
        self.entries[pid] = payload

    def to_bytes(self) -> bytes:
        if self.shape is None:
            raise ValueError("a shape is required for the file format")
        out = bytearray()
        out += self.capacity.to_bytes(4, "big")
        out += self.payload_len.to_bytes(2, "big")
        out += self.shape.to_bytes()
        out += len(self.entries).to_bytes(4, "big")
        for pid in sorted(self.entries):
            out += pid.to_bytes(4, "big")
            out += self.entries[pid]
        return bytes(out)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "SparseDatabase":
        capacity = int.from_bytes(buf[0:4], "big")
        payload_len = int.from_bytes(buf[4:6], "big")
        shape, offset = QueryShape.from_bytes(buf, 6)
        count = int.from_bytes(buf[offset : offset + 4], "big")
        offset += 4
        entries = {}
        for _ in range(count):
            pid = int.from_bytes(buf[offset : offset + 4], "big")
            offset += 4
            entries[pid] = bytes(buf[offset : offset + payload_len])
            offset += payload_len
        return cls(capacity=capacity, payload_len=payload_len, entries=entries, shape=shape)


@dataclass(frozen=True)
class PirResponse:
    body: LayeredCiphertext


@dataclass
class FoldCounters:
    """Instrumentation for the sparsity property tests."""

    scale_calls_by_iteration: dict[int, int] = field(default_factory=dict)

    def bump(self, iteration: int, amount: int = 1):
        self.scale_calls_by_iteration[iteration] = (
            self.scale_calls_by_iteration.get(iteration, 0) + amount
        )


# ---------------------------------------------------------------------------
# Responders


def _item_digits(pk: PaillierPublicKey, item, level: int, payload_digits: int) -> list[int]:
    """Digits of a work item entering fold `level` (item is at layer level-1)."""
    if level == 1:
        return pai.payload_to_digits(pk, item, payload_digits)
    return pai.chunks_to_digits(pk, item)


def _zero_item(pk: PaillierPublicKey, layer: int, payload_len: int, payload_digits: int):
    if layer == 0:
        return bytes(payload_len)
    return [0] * (payload_digits * (1 << (layer - 1)))


def sparse_respond(
    query: PirQuery,
    db: SparseDatabase,
    s: int,
    rng: random.Random,
    counters: FoldCounters | None = None,
) -> PirResponse | EmptySentinel:
    """Fold the query over the sparse table, skipping absent slots.

    Empties are materialized entering iteration s; the all-empty table at
    s = d short-circuits to EmptySentinel.
    """
    shape = query.shape
    if db.capacity != shape.capacity:
        raise ShapeMismatch("database capacity does not match query shape")
    if not 1 <= s <= shape.d:
        raise ValueError("replace iteration must be in [1, d]")
    pk = query.pk
    payload_digits = pai.payload_digit_count(pk, db.payload_len)

    if not db.entries and s == shape.d:
        return EMPTY

    work: dict[int, object] = dict(db.entries)
    extent = db.capacity
    for i, m_i in enumerate(shape.dims, start=1):
        row_len = extent // m_i
        if i == s:
            for ind in range(extent):
                if ind not in work:
                    work[ind] = _zero_item(pk, i - 1, db.payload_len, payload_digits)
        sub = query.subqueries[i - 1]
        folded: dict[int, list[int]] = {}
        for ind in sorted(work):
            item = work[ind]
            row, col = divmod(ind, row_len)
            digits = _item_digits(pk, item, i, payload_digits)
            scaled = [pai.hom_scale(pk, sub[row], dig) for dig in digits]
            if counters is not None:
                counters.bump(i, len(scaled))
            cell = folded.get(col)
            if cell is None:
                folded[col] = scaled
            else:
                folded[col] = [pai.hom_add(pk, a, b) for a, b in zip(cell, scaled)]
        for col in sorted(folded):
            folded[col] = [pai.rerandomize_bounded(pk, c, rng) for c in folded[col]]
        work = dict(folded)
        extent = row_len

    if not work:
        return EMPTY
    (chunks,) = work.values()
    return PirResponse(LayeredCiphertext(layer=shape.d, chunks=tuple(chunks)))


_DENSE_MARKER = object()


def materialize_dense(db: SparseDatabase, shape: QueryShape) -> list:
    """Dense table for the reference responder: payloads plus empty markers."""
    if db.capacity != shape.capacity:
        raise ShapeMismatch("database capacity does not match shape")
    return [db.entries.get(pid, _DENSE_MARKER) for pid in range(db.capacity)]


def naive_respond(
    query: PirQuery,
    dense: list,
    s: int,
    rng: random.Random,
    payload_len: int,
) -> PirResponse | EmptySentinel:
    """Textbook per-level fold over a dense table, no skipping.

    Markers ride along as absent until the replace iteration forces them
    into zero digits; decryption matches sparse_respond byte for byte.
    """
    shape = query.shape
    if len(dense) != shape.capacity:
        raise ShapeMismatch("dense table size does not match query shape")
    pk = query.pk
    payload_digits = pai.payload_digit_count(pk, payload_len)

    if all(item is _DENSE_MARKER for item in dense) and s == shape.d:
        return EMPTY

    work: list = list(dense)
    extent = shape.capacity
    for i, m_i in enumerate(shape.dims, start=1):
        row_len = extent // m_i
        sub = query.subqueries[i - 1]
        out: list = []
        for col in range(row_len):
            members = [(ind // row_len, work[ind]) for ind in range(col, extent, row_len)]
            if i <= s - 1 and all(item is _DENSE_MARKER for _, item in members):
                out.append(_DENSE_MARKER)
                continue
            cell: list[int] | None = None
            for row, item in members:
                if item is _DENSE_MARKER:
                    item = _zero_item(pk, i - 1, payload_len, payload_digits)
                digits = _item_digits(pk, item, i, payload_digits)
                scaled = [pai.hom_scale(pk, sub[row], dig) for dig in digits]
                cell = scaled if cell is None else [pai.hom_add(pk, a, b) for a, b in zip(cell, scaled)]
            out.append([pai.rerandomize_bounded(pk, c, rng) for c in cell])
        work = out
        extent = row_len

    (result,) = work
    return PirResponse(LayeredCiphertext(layer=shape.d, chunks=tuple(result)))


# ---------------------------------------------------------------------------
# Classification


def classify_response(
    sk: PaillierSecretKey,
    resp: PirResponse,
    d: int,
    payload_len: int,
    payload_check=None,
) -> tuple[ResponseType, bytes | None]:
    """Peel a response and name its type.

    `payload_check` (optional) validates non-zero payload bytes, e.g.
    group-membership of the contained commitments.
    """
    pk = sk.public
    lc = resp.body
    if lc.layer != d:
        raise MalformedResponse("response layer does not match query dimension")
    if len(lc.chunks) != pai.chunk_count(pk, payload_len, d):
        raise MalformedResponse("chunk count does not match payload width")

    chunks = list(lc.chunks)
    layer = d
    digit_cap = 1 << pk.digit_bits
    while layer > 0:
        zeros = sum(1 for c in chunks if c == 0)
        if zeros == len(chunks):
            if layer == d:
                raise MalformedResponse("bare zero string at the response layer")
            return type_i(layer), None
        if zeros:
            raise MalformedResponse("mixed zero and non-zero chunks")
        digits = [pai.paillier_decrypt(sk, c) for c in chunks]
        if any(dig >= digit_cap for dig in digits):
            raise MalformedResponse("decrypted digit exceeds the digit width")
        layer -= 1
        if layer == 0:
            payload = pai.digits_to_payload(pk, digits, payload_len)
            if all(b == 0 for b in payload):
                return TYPED, None
            if payload_check is not None and not payload_check(payload):
                raise MalformedResponse("payload is not a valid record")
            return TYPE0, payload
        chunks = pai.digits_to_chunks(pk, digits)
    raise AssertionError("unreachable")


def simulate_response_type(
    occupied: set[int], shape: QueryShape, s: int, pid: int
) -> ResponseType:
    """Plaintext oracle for the type a lender's response takes.

    Mirrors the fold on occupancy alone, including the lender-side
    substitution of a deep zero for the all-empty sentinel.
    """
    if not 1 <= s <= shape.d:
        raise ValueError("replace iteration must be in [1, d]")
    if pid in occupied:
        return TYPE0
    if not occupied and s == shape.d:
        return TYPED  # sentinel, replaced by a fresh deep zero on the wire

    # The selected cell's content across folds: "absent", a zero string
    # born at some layer, or an encrypted zero chain (deep zero).
    coords = pid_to_coords(shape, pid)
    extent = shape.capacity
    state = ("absent", 0)  # absent | zero(layer) | deep
    live = set(occupied)
    ind = pid
    for i, m_i in enumerate(shape.dims, start=1):
        row_len = extent // m_i
        if i == s and state[0] == "absent":
            state = ("zero", i - 1)
        col = ind % row_len
        column_live = any(l % row_len == col for l in live)
        if state[0] == "absent":
            state = ("zero", i - 1) if column_live else ("absent", 0)
        elif state[0] == "zero":
            pass  # zero strings fold into encryptions of the same zeros
        live = {l % row_len for l in live}
        ind = col
        extent = row_len
    if state[0] == "absent":
        return TYPED  # sentinel case, s == d and nothing occupied
    layer = state[1]
    return TYPED if layer == 0 else type_i(layer)


# ---------------------------------------------------------------------------
# Size formulas


def predicted_query_bits(shape: QueryShape, f: int, l_plain: int) -> int:
    """Total query size: one f*l ciphertext per coordinate slot."""
    if f < 2:
        raise ValueError("expansion factor must be >= 2")
    return sum(shape.dims) * f * l_plain


def predicted_response_bits(d: int, f: int, l_plain: int) -> int:
    """Response size after d recursive expansions."""
    if f < 2:
        raise ValueError("expansion factor must be >= 2")
    return f**d * l_plain
