"""Length-prefixed framing shared by hash preimages and wire messages."""

from __future__ import annotations

import struct
from typing import Iterator

_LEN = struct.Struct(">I")


class FramingError(ValueError):
    pass


def frame(*fields: bytes) -> bytes:
    """Concatenate ``fields``, each preceded by its 4-byte big-endian length."""
    out = bytearray()
    for f in fields:
        out += _LEN.pack(len(f))
        out += f
    return bytes(out)


def iter_frames(data: bytes) -> Iterator[bytes]:
    """Yield framed fields one at a time; raises FramingError where the framing breaks."""
    pos = 0
    end = len(data)
    while pos < end:
        if pos + 4 > end:
            raise FramingError("truncated length prefix")
        (n,) = _LEN.unpack_from(data, pos)
        pos += 4
        if pos + n > end:
            raise FramingError("field overruns buffer")
        yield bytes(data[pos:pos + n])
        pos += n


def unframe(data: bytes, count: int | None = None) -> list[bytes]:
    """Inverse of :func:`frame`.  If ``count`` is given the field count must match."""
    fields = list(iter_frames(data))
    if count is not None and len(fields) != count:
        raise FramingError(f"expected {count} fields, got {len(fields)}")
    return fields


def encode_uint(value: int, width: int = 8) -> bytes:
    return value.to_bytes(width, "big")


def decode_uint(data: bytes, width: int = 8) -> int:
    if len(data) != width:
        raise FramingError(f"expected {width}-byte integer, got {len(data)}")
    return int.from_bytes(data, "big")
