"""Dolev-Yao adversary on the open radio links.

The adversary sees every open-channel message, can drop, modify, replay or
inject messages, and remembers everything it observed.  It holds no private
keys and cannot invert the primitives.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

import yaml

from vfcauth.crypto.encoding import FramingError, frame, unframe
from vfcauth.crypto.primitives import DIGEST_SIZE, encode_scalar, random_scalar
from vfcauth.messages import AuthRequest, AuthResponse, split
from vfcauth.protocol import session_key

if TYPE_CHECKING:
    from vfcauth.simnet.world import NetMessage, World

ACTION_KINDS = ("replay", "tamper", "impersonate", "drop")
OPEN_KINDS = ("registration_request", "auth_request", "auth_response", "handoff_request",
              "handoff_response")
SECURE_KINDS = ("registration_response", "registration_reject", "auth_result", "P_req", "P_res",
                "block_commit", "chain_sync", "sync_request")


class AdversaryError(ValueError):
    pass


@dataclass(frozen=True)
class Selector:
    kind: str
    src: str | None = None
    dst: str | None = None
    nth: int = 0
    every: bool = False

    def matches(self, msg: NetMessage) -> bool:
        return (msg.kind == self.kind
                and (self.src is None or msg.src == self.src)
                and (self.dst is None or msg.dst == self.dst))


@dataclass(frozen=True)
class AdversaryAction:
    """One scripted adversarial behaviour.

    ``replay``: re-send a captured message ``delay_ms`` after it was seen.
    ``tamper``: flip ``bit`` of field ``field`` (or XOR byte ``offset`` with ``xor``) in flight.
    ``drop``: suppress the message.
    ``impersonate``: at ``at``, send ``count`` forged messages claiming to be ``obu``
    (role ``obu``: forged auth requests to the SM) or an SM (role ``sm``: forged
    auth responses to the OBU right after it sends a request).
    """

    kind: str
    target: Selector | None = None
    mutation: dict[str, int] = field(default_factory=dict)
    delay_ms: int = 0
    obu: int = 0
    at: int = 0
    count: int = 1
    role: str = "obu"

    def __post_init__(self):
        if self.kind not in ACTION_KINDS:
            raise AdversaryError(f"unknown adversary action {self.kind!r}")
        if self.kind in ("replay", "tamper", "drop"):
            if self.target is None:
                raise AdversaryError(f"{self.kind} needs a target selector")
            if self.target.kind in SECURE_KINDS:
                raise AdversaryError(f"{self.target.kind} travels on the secure channel")
            if self.target.kind not in OPEN_KINDS:
                raise AdversaryError(f"unknown message kind {self.target.kind!r}")
        if self.kind == "tamper" and not (
                {"field", "bit"} <= self.mutation.keys() or {"offset", "xor"} <= self.mutation.keys()):
            raise AdversaryError("tamper needs mutation {field, bit} or {offset, xor}")
        if self.kind == "impersonate" and self.role not in ("obu", "sm"):
            raise AdversaryError("impersonate role must be 'obu' or 'sm'")
        if self.count < 1 or self.delay_ms < 0:
            raise AdversaryError("count must be >= 1 and delay_ms >= 0")

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> AdversaryAction:
        raw = dict(raw)
        try:
            target = raw.pop("target", None)
            if isinstance(target, str):
                target = {"kind": target}
            return cls(target=Selector(**target) if target else None,
                       mutation=dict(raw.pop("mutation", None) or {}), **raw)
        except TypeError as exc:
            raise AdversaryError(f"bad adversary action: {exc}") from exc

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind}
        if self.target:
            d["target"] = {"kind": self.target.kind, "src": self.target.src,
                           "dst": self.target.dst, "nth": self.target.nth,
                           "every": self.target.every}
        if self.mutation:
            d["mutation"] = dict(sorted(self.mutation.items()))
        if self.kind == "replay":
            d["delay_ms"] = self.delay_ms
        if self.kind == "impersonate":
            d.update(obu=self.obu, at=self.at, count=self.count, role=self.role)
        return d


def load_script(path: str | Path) -> list[AdversaryAction]:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise AdversaryError(f"{path}: cannot parse: {exc}") from exc
    if isinstance(raw, dict):
        raw = raw.get("actions")
    if not isinstance(raw, list):
        raise AdversaryError(f"{path}: expected a list of actions")
    return [AdversaryAction.from_dict(a) for a in raw]


def mutate(payload: bytes, mutation: dict[str, int]) -> bytes:
    if "field" in mutation:
        parts = unframe(payload)
        idx = mutation["field"] + 1  # part 0 is the kind tag
        if not 1 <= idx < len(parts) or not parts[idx]:
            raise AdversaryError(f"message has no field {mutation['field']}")
        f = bytearray(parts[idx])
        bit = mutation["bit"] % (8 * len(f))
        f[bit // 8] ^= 1 << (bit % 8)
        parts[idx] = bytes(f)
        return frame(*parts)
    buf = bytearray(payload)
    buf[mutation["offset"] % len(buf)] ^= mutation["xor"] & 0xFF or 1
    return bytes(buf)


class Adversary:
    def __init__(self, actions: list[AdversaryAction], rng: random.Random):
        self.actions = list(actions)
        self.rng = rng
        self._seen_counts = [0] * len(self.actions)
        self.captured: list[tuple[int, str, str, bytes]] = []
        self.digests: set[bytes] = set()
        # per radio address: (id, t_obu) of requests sent, t_sm of responses received
        self.requests: dict[str, set[tuple[bytes, int]]] = {}
        self.response_times: dict[str, set[int]] = {}

    def add(self, action: AdversaryAction) -> None:
        self.actions.append(action)
        self._seen_counts.append(0)

    def _learn(self, msg: NetMessage) -> None:
        try:
            kind, fields = split(msg.payload)
        except ValueError:
            return
        for f in fields:
            if len(f) == DIGEST_SIZE:
                self.digests.add(f)
        try:
            if kind == "auth_request" and len(fields) == 4:
                self.requests.setdefault(msg.src, set()).add(
                    (fields[3], int.from_bytes(fields[2], "big")))
            elif kind == "auth_response" and len(fields) == 3:
                self.response_times.setdefault(msg.dst, set()).add(int.from_bytes(fields[0], "big"))
        except (ValueError, FramingError):
            pass

    def intercept(self, world: World, msg: NetMessage) -> NetMessage | None:
        """Observe ``msg`` and apply matching actions; returns what actually goes on the air."""
        self.captured.append((world.now, msg.src, msg.dst, msg.payload))
        self._learn(msg)
        for i, action in enumerate(self.actions):
            if action.target is None or not action.target.matches(msg):
                continue
            n = self._seen_counts[i]
            self._seen_counts[i] += 1
            if not action.target.every and n != action.target.nth:
                continue
            world.trace.log(world.now, "adversary", action.kind, "applied",
                            msg_id=msg.msg_id, target=msg.kind)
            if action.kind == "drop":
                world.note_dropped(msg)
                return None
            if action.kind == "tamper":
                msg = msg.replace(payload=mutate(msg.payload, action.mutation), adversarial=True)
            elif action.kind == "replay":
                world.schedule_injection(world.now + action.delay_ms, msg.src, msg.dst,
                                         msg.payload, origin=f"replay:{msg.msg_id}")
        for i, action in enumerate(self.actions):
            if (action.kind == "impersonate" and action.role == "sm" and msg.kind == "auth_request"
                    and msg.src == f"obu:{action.obu}" and self._seen_counts[i] < action.count):
                self._seen_counts[i] += 1
                self._forge_response(world, msg)
        return msg

    def _forge_response(self, world: World, msg: NetMessage) -> None:
        curve = world.curve
        t = world.now
        forged = frame(AuthResponse.KIND.encode(), t.to_bytes(8, "big"),
                       encode_scalar(curve, random_scalar(curve, self.rng)),
                       self.rng.getrandbits(256).to_bytes(32, "big"))
        world.trace.log(world.now, "adversary", "impersonate", "applied", role="sm", target=msg.src)
        world.schedule_injection(world.now + 1, msg.dst, msg.src, forged, origin="forged-sm")

    def forge_requests(self, world: World, action: AdversaryAction) -> None:
        """Send ``action.count`` auth requests for a victim's identity without its secrets."""
        obu = world.obus[action.obu]
        curve = world.curve
        if obu.identity is None:
            world.trace.log(world.now, "adversary", "impersonate", "skipped", role="obu",
                            target=f"obu:{action.obu}", reason="victim identity not yet observed")
            return
        rsu = world.rsu_for(obu)
        for k in range(action.count):
            t = world.now + k
            forged = AuthRequest(self.rng.getrandbits(256).to_bytes(32, "big"),
                                 random_scalar(curve, self.rng), t, obu.identity)
            world.schedule_injection(world.now + k, f"obu:{action.obu}", rsu,
                                     forged.to_bytes(curve), origin="forged-obu")
        world.trace.log(world.now, "adversary", "impersonate", "applied", role="obu",
                        target=f"obu:{action.obu}", count=action.count)

    def derived_keys(self) -> set[bytes]:
        """Every session key the adversary can compute from what it saw."""
        keys = set()
        for addr, reqs in self.requests.items():
            for id_, t_obu in reqs:
                for t_sm in self.response_times.get(addr, ()):
                    for d in self.digests:
                        keys.add(session_key(id_, d, t_obu, t_sm))
        return keys
