"""Consortium ledger: registration table, hash-chained blocks of auth results, revocations."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Iterable

from vfcauth.crypto.ec import Point
from vfcauth.crypto.encoding import (
    FramingError,
    decode_uint,
    encode_uint,
    frame,
    iter_frames,
    unframe,
)
from vfcauth.crypto.primitives import DIGEST_SIZE, h1
from vfcauth.membership import P_REQ, P_RES, Membership

ZERO_HASH = bytes(DIGEST_SIZE)
EXPORT_MAGIC = b"VFCLEDG1"


class LedgerError(Exception):
    """Ledger rule violation or unreadable export; ``height`` is the first bad block if known."""

    def __init__(self, message: str, height: int | None = None):
        super().__init__(message)
        self.height = height


@dataclass(frozen=True)
class LedgerRegistration:
    id: bytes
    pk: Point
    l: bytes
    registered_at: int


@dataclass(frozen=True)
class AuthRecord:
    l: bytes
    obu_id: bytes
    sm_id: bytes
    t_obu: int
    t_sm: int
    result: str = "success"

    def to_bytes(self) -> bytes:
        return frame(self.l, self.obu_id, self.sm_id, encode_uint(self.t_obu),
                     encode_uint(self.t_sm), self.result.encode())

    @classmethod
    def from_bytes(cls, data: bytes) -> AuthRecord:
        l, obu_id, sm_id, t_obu, t_sm, result = unframe(data, 6)
        if result != b"success":
            raise FramingError("unknown auth result")
        return cls(l, obu_id, sm_id, decode_uint(t_obu), decode_uint(t_sm))


def _header_bytes(height: int, prev_hash: bytes, created_at: int, records) -> bytes:
    return frame(encode_uint(height), prev_hash, encode_uint(created_at),
                 frame(*(r.to_bytes() for r in records)))


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: bytes
    created_at: int
    records: tuple[AuthRecord, ...]
    block_hash: bytes
    proposer: bytes = b""
    proposer_sig: bytes = b""
    signatures: tuple[tuple[bytes, bytes], ...] = ()

    @classmethod
    def build(cls, height: int, prev_hash: bytes, created_at: int,
              records: Iterable[AuthRecord]) -> Block:
        records = tuple(records)
        digest = h1(_header_bytes(height, prev_hash, created_at, records))
        return cls(height, prev_hash, created_at, records, digest)

    def compute_hash(self) -> bytes:
        return h1(_header_bytes(self.height, self.prev_hash, self.created_at, self.records))

    def with_signatures(self, signatures) -> Block:
        return dataclasses.replace(self, signatures=tuple(signatures))

    def to_bytes(self) -> bytes:
        return frame(
            _header_bytes(self.height, self.prev_hash, self.created_at, self.records),
            self.block_hash,
            self.proposer,
            self.proposer_sig,
            frame(*(frame(w, s) for w, s in self.signatures)),
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> Block:
        header, block_hash, proposer, proposer_sig, sigs = unframe(data, 5)
        height, prev_hash, created_at, records = unframe(header, 4)
        return cls(
            height=decode_uint(height),
            prev_hash=prev_hash,
            created_at=decode_uint(created_at),
            records=tuple(AuthRecord.from_bytes(r) for r in unframe(records)),
            block_hash=block_hash,
            proposer=proposer,
            proposer_sig=proposer_sig,
            signatures=tuple(tuple(unframe(s, 2)) for s in unframe(sigs)),
        )


def check_block(block: Block, height: int, prev_hash: bytes, members: Membership) -> str | None:
    """Return why ``block`` cannot sit at ``height`` after ``prev_hash``, or None if it can."""
    if block.height != height:
        return f"height {block.height} != expected {height}"
    if block.prev_hash != prev_hash:
        return "prev_hash does not match head"
    if block.compute_hash() != block.block_hash:
        return "block_hash mismatch"
    speaker = members.speaker(height)
    if block.proposer != speaker:
        return "proposer is not the speaker for this height"
    if not members.verify(speaker, P_REQ, height, block.block_hash, block.proposer_sig):
        return "bad proposer signature"
    signers = set()
    for wp_id, sig in block.signatures:
        if wp_id == speaker or wp_id in signers:
            continue
        if members.verify(wp_id, P_RES, height, block.block_hash, sig):
            signers.add(wp_id)
    if len(signers) < members.quorum:
        return f"{len(signers)} valid signatures < quorum {members.quorum}"
    return None


class Chain:
    """Append-only sequence of blocks validated against a fixed membership."""

    def __init__(self, members: Membership, blocks: Iterable[Block] = ()):
        self.members = members
        self._blocks: list[Block] = []
        self._by_l: dict[bytes, AuthRecord] = {}
        self._records: set[AuthRecord] = set()
        for b in blocks:
            self.append(b)

    @classmethod
    def unchecked(cls, members: Membership, blocks: Iterable[Block]) -> Chain:
        """Load blocks without validation, e.g. from an untrusted export."""
        chain = cls(members)
        for b in blocks:
            chain._push(b)
        return chain

    def __len__(self) -> int:
        return len(self._blocks)

    def __iter__(self):
        return iter(self._blocks)

    def __getitem__(self, i):
        return self._blocks[i]

    @property
    def height(self) -> int:
        return len(self._blocks)

    @property
    def head_hash(self) -> bytes:
        return self._blocks[-1].block_hash if self._blocks else ZERO_HASH

    def _push(self, block: Block) -> None:
        self._blocks.append(block)
        for r in block.records:
            self._by_l.setdefault(r.l, r)
            self._records.add(r)

    def append(self, block: Block) -> None:
        problem = check_block(block, self.height, self.head_hash, self.members)
        if problem:
            raise LedgerError(f"rejected block at height {block.height}: {problem}")
        self._push(block)

    def find_auth(self, l: bytes) -> AuthRecord | None:
        return self._by_l.get(l)

    def has_record(self, record: AuthRecord) -> bool:
        return record in self._records

    def copy(self) -> Chain:
        return Chain.unchecked(self.members, self._blocks)

    def to_bytes(self) -> bytes:
        return EXPORT_MAGIC + frame(
            frame(*(frame(w, k) for w, k in self.members.members)),
            *(b.to_bytes() for b in self._blocks),
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> Chain:
        if not data.startswith(EXPORT_MAGIC):
            raise LedgerError("not a ledger export (bad magic)", 0)
        parts = iter_frames(data[len(EXPORT_MAGIC):])
        try:
            members = Membership(tuple(tuple(unframe(m, 2)) for m in unframe(next(parts))))
        except (StopIteration, FramingError, ValueError) as exc:
            raise LedgerError(f"corrupt membership section: {exc}", 0) from exc
        blocks = []
        try:
            for raw in parts:
                blocks.append(Block.from_bytes(raw))
        except (FramingError, ValueError) as exc:
            raise LedgerError(f"corrupt block at height {len(blocks)}: {exc}", len(blocks)) from exc
        return cls.unchecked(members, blocks)

    def to_json(self) -> dict:
        return {
            "members": [w.hex() for w in self.members.ids],
            "quorum": self.members.quorum,
            "blocks": [
                {
                    "height": b.height,
                    "prev_hash": b.prev_hash.hex(),
                    "created_at": b.created_at,
                    "block_hash": b.block_hash.hex(),
                    "proposer": b.proposer.hex(),
                    "signers": [w.hex() for w, _ in b.signatures],
                    "records": [
                        {"l": r.l.hex(), "obu_id": r.obu_id.hex(), "sm_id": r.sm_id.hex(),
                         "t_obu": r.t_obu, "t_sm": r.t_sm, "result": r.result}
                        for r in b.records
                    ],
                }
                for b in self._blocks
            ],
        }


def append_block(chain: Chain, block: Block) -> Chain:
    chain.append(block)
    return chain


def validate_chain(chain: Iterable[Block] | Chain, members: Membership | None = None) -> int | None:
    """Return the first height that violates a link, hash or quorum rule, or None if all hold."""
    if members is None:
        members = chain.members
    prev = ZERO_HASH
    for height, block in enumerate(chain):
        if check_block(block, height, prev, members):
            return height
        prev = block.block_hash
    return None


def dump_json(chain: Chain) -> str:
    return json.dumps(chain.to_json(), indent=2, sort_keys=True)


class RegistrationTable:
    """AD-maintained id -> registration map, readable by every service manager."""

    def __init__(self):
        self._by_id: dict[bytes, LedgerRegistration] = {}

    def __contains__(self, id_: bytes) -> bool:
        return id_ in self._by_id

    def __len__(self) -> int:
        return len(self._by_id)

    def add(self, reg: LedgerRegistration) -> None:
        if reg.id in self._by_id:
            raise LedgerError("identity already registered")
        self._by_id[reg.id] = reg

    def get(self, id_: bytes) -> LedgerRegistration | None:
        return self._by_id.get(id_)


@dataclass
class RevocationList:
    revoked: set[bytes] = field(default_factory=set)

    def revoke(self, l: bytes) -> RevocationList:
        self.revoked.add(l)
        return self

    def is_revoked(self, l: bytes) -> bool:
        return l in self.revoked


@dataclass
class LedgerView:
    """What a service manager can read: the registration table and its peer's committed chain."""

    registrations: RegistrationTable
    chain: Chain | None = None


def lookup_credential(view: LedgerView, *, id: bytes | None = None,
                      l: bytes | None = None) -> LedgerRegistration | AuthRecord | None:
    if (id is None) == (l is None):
        raise TypeError("pass exactly one of id= or l=")
    if id is not None:
        return view.registrations.get(id)
    if view.chain is None:
        return None
    return view.chain.find_auth(l)

