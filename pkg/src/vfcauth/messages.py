"""Protocol messages and their canonical wire form.

Every message is ``frame(kind, field_1, ..., field_k)``; the fields follow the
order of the message dataclass, so the number of fields is also the number of
protocol tokens a message carries.
"""

from __future__ import annotations

from dataclasses import dataclass

from vfcauth.crypto.ec import CurveParams, Point
from vfcauth.crypto.encoding import FramingError, decode_uint, encode_uint, frame, unframe
from vfcauth.crypto.primitives import DIGEST_SIZE, HybridCiphertext, decode_scalar, encode_scalar
from vfcauth.ledger import AuthRecord, Block

ID_SIZE = 16


class MessageError(ValueError):
    """A byte string is not a well-formed message of the expected kind."""


def _digest(b: bytes) -> bytes:
    if len(b) != DIGEST_SIZE:
        raise MessageError("digest must be 32 bytes")
    return b


def _identity(b: bytes) -> bytes:
    if len(b) != ID_SIZE:
        raise MessageError(f"identity must be {ID_SIZE} bytes")
    return b


def _scalar(curve: CurveParams, b: bytes) -> int:
    try:
        return decode_scalar(curve, b)
    except ValueError as exc:
        raise MessageError(str(exc)) from exc


def _time(b: bytes) -> int:
    try:
        return decode_uint(b)
    except FramingError as exc:
        raise MessageError(str(exc)) from exc


def split(data: bytes) -> tuple[str, list[bytes]]:
    """Return ``(kind, fields)`` for a wire message."""
    try:
        parts = unframe(data)
    except FramingError as exc:
        raise MessageError(str(exc)) from exc
    if not parts:
        raise MessageError("empty message")
    try:
        kind = parts[0].decode("ascii")
    except UnicodeDecodeError as exc:
        raise MessageError("bad kind tag") from exc
    return kind, parts[1:]


def _expect(data: bytes, kind: str, count: int) -> list[bytes]:
    got, fields = split(data)
    if got != kind:
        raise MessageError(f"expected {kind}, got {got}")
    if len(fields) != count:
        raise MessageError(f"{kind} needs {count} fields, got {len(fields)}")
    return fields


def token_count(data: bytes) -> int:
    return len(split(data)[1])


@dataclass(frozen=True)
class RegistrationRequest:
    KIND = "registration_request"

    ciphertext: HybridCiphertext
    t_plain: int

    def to_bytes(self, curve: CurveParams | None = None) -> bytes:
        return frame(self.KIND.encode(), self.ciphertext.to_bytes(), encode_uint(self.t_plain))

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> RegistrationRequest:
        ct, t = _expect(data, cls.KIND, 2)
        try:
            return cls(HybridCiphertext.from_bytes(curve, ct), _time(t))
        except ValueError as exc:
            raise MessageError(str(exc)) from exc


@dataclass(frozen=True)
class RegistrationResponse:
    """Key material sent from the AD to a new member.  Only ever travels over the secure channel."""

    KIND = "registration_response"

    pk: Point
    sk: int
    m: bytes

    def to_bytes(self, curve: CurveParams) -> bytes:
        return frame(self.KIND.encode(), self.pk.to_bytes(), encode_scalar(curve, self.sk), self.m)

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> RegistrationResponse:
        pk, sk, m = _expect(data, cls.KIND, 3)
        try:
            return cls(Point.from_bytes(curve, pk), _scalar(curve, sk), _digest(m))
        except ValueError as exc:
            raise MessageError(str(exc)) from exc


@dataclass(frozen=True)
class AuthRequest:
    KIND = "auth_request"

    auth: bytes
    r1: int
    t: int
    id: bytes

    def to_bytes(self, curve: CurveParams) -> bytes:
        return frame(self.KIND.encode(), self.auth, encode_scalar(curve, self.r1),
                     encode_uint(self.t), self.id)

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> AuthRequest:
        auth, r1, t, id_ = _expect(data, cls.KIND, 4)
        return cls(_digest(auth), _scalar(curve, r1), _time(t), _identity(id_))


@dataclass(frozen=True)
class AuthResponse:
    KIND = "auth_response"

    t: int
    r2: int
    auth: bytes

    def to_bytes(self, curve: CurveParams) -> bytes:
        return frame(self.KIND.encode(), encode_uint(self.t), encode_scalar(curve, self.r2), self.auth)

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> AuthResponse:
        t, r2, auth = _expect(data, cls.KIND, 3)
        return cls(_time(t), _scalar(curve, r2), _digest(auth))


@dataclass(frozen=True)
class HandoffRequest:
    KIND = "handoff_request"

    ciphertext: HybridCiphertext

    def to_bytes(self, curve: CurveParams | None = None) -> bytes:
        return frame(self.KIND.encode(), self.ciphertext.to_bytes())

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> HandoffRequest:
        (ct,) = _expect(data, cls.KIND, 1)
        try:
            return cls(HybridCiphertext.from_bytes(curve, ct))
        except ValueError as exc:
            raise MessageError(str(exc)) from exc


@dataclass(frozen=True)
class HandoffResponse:
    KIND = "handoff_response"

    verdict: str

    def to_bytes(self, curve: CurveParams | None = None) -> bytes:
        return frame(self.KIND.encode(), self.verdict.encode())

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> HandoffResponse:
        (v,) = _expect(data, cls.KIND, 1)
        return cls(v.decode("ascii", "replace"))


@dataclass(frozen=True)
class AuthResult:
    """SM -> WP broadcast of a completed authentication."""

    KIND = "auth_result"

    record: AuthRecord

    def to_bytes(self, curve: CurveParams | None = None) -> bytes:
        return frame(self.KIND.encode(), self.record.to_bytes())

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> AuthResult:
        (rec,) = _expect(data, cls.KIND, 1)
        try:
            return cls(AuthRecord.from_bytes(rec))
        except FramingError as exc:
            raise MessageError(str(exc)) from exc


@dataclass(frozen=True)
class VoteRequest:
    KIND = "P_req"

    h: int
    speaker_id: bytes
    block: Block
    speaker_sig: bytes

    def to_bytes(self, curve: CurveParams | None = None) -> bytes:
        return frame(self.KIND.encode(), encode_uint(self.h), self.speaker_id,
                     self.block.to_bytes(), self.speaker_sig)

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> VoteRequest:
        h, sp, blk, sig = _expect(data, cls.KIND, 4)
        try:
            return cls(_time(h), sp, Block.from_bytes(blk), sig)
        except FramingError as exc:
            raise MessageError(str(exc)) from exc


@dataclass(frozen=True)
class VoteResponse:
    KIND = "P_res"

    h: int
    voter_id: bytes
    block_hash: bytes
    voter_sig: bytes

    def to_bytes(self, curve: CurveParams | None = None) -> bytes:
        return frame(self.KIND.encode(), encode_uint(self.h), self.voter_id,
                     self.block_hash, self.voter_sig)

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> VoteResponse:
        h, voter, bh, sig = _expect(data, cls.KIND, 4)
        return cls(_time(h), voter, _digest(bh), sig)


@dataclass(frozen=True)
class BlockCommit:
    """Speaker -> all peers: a block that gathered a quorum."""

    KIND = "block_commit"

    block: Block

    def to_bytes(self, curve: CurveParams | None = None) -> bytes:
        return frame(self.KIND.encode(), self.block.to_bytes())

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> BlockCommit:
        (blk,) = _expect(data, cls.KIND, 1)
        try:
            return cls(Block.from_bytes(blk))
        except FramingError as exc:
            raise MessageError(str(exc)) from exc


@dataclass(frozen=True)
class RegistrationReject:
    """AD -> OBU over the secure channel when a registration is refused."""

    KIND = "registration_reject"

    reason: str

    def to_bytes(self, curve: CurveParams | None = None) -> bytes:
        return frame(self.KIND.encode(), self.reason.encode())

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> RegistrationReject:
        (reason,) = _expect(data, cls.KIND, 1)
        return cls(reason.decode("ascii", "replace"))


@dataclass(frozen=True)
class SyncRequest:
    """A lagging witness peer asks for blocks from height ``h`` on."""

    KIND = "sync_request"

    h: int

    def to_bytes(self, curve: CurveParams | None = None) -> bytes:
        return frame(self.KIND.encode(), encode_uint(self.h))

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> SyncRequest:
        (h,) = _expect(data, cls.KIND, 1)
        return cls(_time(h))


@dataclass(frozen=True)
class ChainSync:
    KIND = "chain_sync"

    blocks: tuple[Block, ...]

    def to_bytes(self, curve: CurveParams | None = None) -> bytes:
        return frame(self.KIND.encode(), *(b.to_bytes() for b in self.blocks))

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> ChainSync:
        kind, fields = split(data)
        if kind != cls.KIND:
            raise MessageError(f"expected {cls.KIND}, got {kind}")
        try:
            return cls(tuple(Block.from_bytes(f) for f in fields))
        except FramingError as exc:
            raise MessageError(str(exc)) from exc


MESSAGE_TYPES = {
    cls.KIND: cls
    for cls in (RegistrationRequest, RegistrationResponse, AuthRequest, AuthResponse,
                HandoffRequest, HandoffResponse, AuthResult, VoteRequest, VoteResponse, BlockCommit,
                RegistrationReject, SyncRequest, ChainSync)
}


def decode(curve: CurveParams, data: bytes):
    kind, _ = split(data)
    cls = MESSAGE_TYPES.get(kind)
    if cls is None:
        raise MessageError(f"unknown message kind {kind!r}")
    return cls.from_bytes(curve, data)
