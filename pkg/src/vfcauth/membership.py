"""Witness-peer consortium membership: speaker rotation, quorum and vote tags."""

from __future__ import annotations

import hashlib
import hmac
import math
from dataclasses import dataclass

from vfcauth.crypto.encoding import encode_uint, frame

P_REQ = b"P_req"
P_RES = b"P_res"


def select_speaker(h: int, n: int) -> int:
    """1-based index of the speaker for block height ``h`` among ``n`` peers."""
    if n < 1:
        raise ValueError("need at least one witness peer")
    return (h % n) + 1


def commit_quorum(n: int) -> int:
    """Congressman yes-votes needed to commit.

    ``ceil(2n/3)``, capped at the number of congressmen (only matters for n=2),
    and zero for a lone peer which has nobody to ask.
    """
    if n < 1:
        raise ValueError("need at least one witness peer")
    if n == 1:
        return 0
    return min(math.ceil(2 * n / 3), n - 1)


def tag(key: bytes, kind: bytes, h: int, block_hash: bytes) -> bytes:
    return hmac.new(key, frame(kind, encode_uint(h), block_hash), hashlib.sha256).digest()


@dataclass(frozen=True)
class Membership:
    """Ordered ``(wp_id, mac_key)`` directory shared by all witness peers."""

    members: tuple[tuple[bytes, bytes], ...]

    def __post_init__(self):
        ids = [m for m, _ in self.members]
        if not ids:
            raise ValueError("empty membership")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate witness peer id")

    @property
    def n(self) -> int:
        return len(self.members)

    @property
    def quorum(self) -> int:
        return commit_quorum(self.n)

    @property
    def ids(self) -> list[bytes]:
        return [m for m, _ in self.members]

    def key(self, wp_id: bytes) -> bytes | None:
        for m, k in self.members:
            if m == wp_id:
                return k
        return None

    def speaker(self, h: int) -> bytes:
        return self.members[select_speaker(h, self.n) - 1][0]

    def sign(self, wp_id: bytes, kind: bytes, h: int, block_hash: bytes) -> bytes:
        key = self.key(wp_id)
        if key is None:
            raise KeyError(wp_id)
        return tag(key, kind, h, block_hash)

    def verify(self, wp_id: bytes, kind: bytes, h: int, block_hash: bytes, sig: bytes) -> bool:
        key = self.key(wp_id)
        return key is not None and hmac.compare_digest(tag(key, kind, h, block_hash), sig)
