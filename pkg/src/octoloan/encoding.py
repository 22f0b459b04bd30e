"""Byte encodings shared by the wire format and Fiat-Shamir hashing.

Integers travel as big-endian unsigned magnitudes behind a 4-byte
big-endian length prefix.  Fixed-width helpers exist for fields whose
size is pinned by the carrying structure (ciphertext chunks, payloads).
"""

from __future__ import annotations

import struct


def encode_int(value: int) -> bytes:
    """Length-prefixed big-endian encoding of a non-negative integer."""
    if value < 0:
        raise ValueError("negative integers are not encodable")
    mag = value.to_bytes((value.bit_length() + 7) // 8, "big") if value else b""
    return struct.pack(">I", len(mag)) + mag


def decode_int(buf: bytes, offset: int = 0) -> tuple[int, int]:
    """Decode one length-prefixed integer, returning (value, next_offset)."""
    (length,) = struct.unpack_from(">I", buf, offset)
    offset += 4
    value = int.from_bytes(buf[offset : offset + length], "big")
    return value, offset + length


def encode_bytes(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


def decode_bytes(buf: bytes, offset: int = 0) -> tuple[bytes, int]:
    (length,) = struct.unpack_from(">I", buf, offset)
    offset += 4
    return bytes(buf[offset : offset + length]), offset + length


def fixed_bytes(value: int, width: int) -> bytes:
    """Big-endian encoding padded to exactly `width` bytes."""
    return value.to_bytes(width, "big")


def encode_str(text: str) -> bytes:
    return encode_bytes(text.encode("utf-8"))


def decode_str(buf: bytes, offset: int = 0) -> tuple[str, int]:
    raw, offset = decode_bytes(buf, offset)
    return raw.decode("utf-8"), offset
