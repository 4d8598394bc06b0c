"""Discrete-event world: regions with RSU/SM/WP, the audit department, and vehicles.

Time is an integer number of simulated milliseconds.  The event queue is
ordered by ``(time, insertion sequence)``, every random draw comes from a
generator seeded from the scenario seed and the actor name, so a given
``(config, seed)`` always produces the same trace.

Radio hops (vehicle <-> RSU) are the open channel the adversary controls.
The consortium backbone (RSU, SM, WP, AD) and the registration hand-over are
secure channels.
"""

from __future__ import annotations

import dataclasses
import heapq
import random
from dataclasses import dataclass
from typing import Any, Callable

from vfcauth.consensus import WpState, apply_commit, speaker_propose, speaker_tally, wp_vote
from vfcauth.crypto import opcount
from vfcauth.crypto.ec import get_curve
from vfcauth.crypto.primitives import KeyPair, h1, setup
from vfcauth.ledger import AuthRecord, Block, Chain, LedgerError, LedgerView, RevocationList
from vfcauth.membership import P_RES, Membership
from vfcauth.messages import (
    AuthRequest,
    AuthResponse,
    AuthResult,
    BlockCommit,
    ChainSync,
    HandoffRequest,
    HandoffResponse,
    MessageError,
    RegistrationReject,
    RegistrationRequest,
    RegistrationResponse,
    SyncRequest,
    VoteRequest,
    VoteResponse,
    split,
    token_count,
)
from vfcauth.protocol import (
    AdState,
    Credential,
    PendingAuth,
    ProtocolReject,
    Reason,
    SmState,
    Verdict,
    ad_process_registration,
    new_identity,
    obu_begin_registration,
    obu_create_auth_request,
    obu_create_handoff,
    obu_verify_auth_response,
    sm_process_handoff,
    sm_verify_auth_request,
)
from vfcauth.simnet.adversary import (
    OPEN_KINDS,
    Adversary,
    AdversaryAction,
    AdversaryError,
    load_script,
)
from vfcauth.simnet.config import ScenarioConfig
from vfcauth.simnet.trace import EventTrace

OPEN = "open"
SECURE = "secure"


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class NetMessage:
    msg_id: int
    src: str
    dst: str
    payload: bytes
    channel: str
    sent_at: int
    adversarial: bool = False
    origin: str | None = None
    final_dst: str | None = None  # set on messages an RSU must forward
    via: str | None = None        # RSU a request came through, for the reply

    @property
    def kind(self) -> str:
        try:
            return split(self.payload)[0]
        except MessageError:
            return "?"

    def replace(self, **changes) -> NetMessage:
        return dataclasses.replace(self, **changes)


def _ops(counter) -> dict[str, int]:
    return {"hash": counter["h1"] + counter["h2"], "scalar_mult": counter["scalar_mult"],
            "kdf": counter["kdf"]}


def session_label(obu_id: bytes, t_obu: int) -> str:
    return f"{obu_id.hex()}:{t_obu}"


class Actor:
    name: str
    actor_class: str

    def __init__(self, world: World, name: str):
        self.world = world
        self.name = name
        self.rng = random.Random(f"{world.config.seed}:{name}")

    @property
    def clock(self) -> int:
        return self.world.now + self.world.config.skew(self.actor_class)

    def log(self, event: str, outcome: str = "ok", **details: Any) -> dict:
        return self.world.trace.log(self.world.now, self.name, event, outcome, **details)

    def handle(self, msg: NetMessage) -> None:
        raise NotImplementedError


class Rsu(Actor):
    actor_class = "rsu"

    def __init__(self, world: World, name: str, region: int):
        super().__init__(world, name)
        self.region = region

    def handle(self, msg: NetMessage) -> None:
        if msg.final_dst is not None:
            # backbone -> vehicle
            self.world.send(self.name, msg.final_dst, msg.payload, OPEN,
                            adversarial=msg.adversarial, origin=msg.origin)
            return
        kind = msg.kind
        if kind == "registration_request":
            dst = "ad"
        elif kind in ("auth_request", "handoff_request"):
            dst = self.world.regions[self.region].sm.name
        else:
            self.log("relay", "dropped", kind=kind)
            return
        self.world.send(self.name, dst, msg.payload, SECURE, adversarial=msg.adversarial,
                        origin=msg.src, via=self.name)


class AuditDepartment(Actor):
    actor_class = "ad"

    def __init__(self, world: World, state: AdState):
        super().__init__(world, "ad")
        self.state = state

    def register_direct(self, identity: bytes) -> RegistrationResponse:
        """Register a service manager at build time over the secure channel."""
        req = obu_begin_registration(identity, self.clock, self.state.keypair.pk, self.rng)
        resp, _ = ad_process_registration(req, self.state, self.clock, self.rng)
        return resp

    def handle(self, msg: NetMessage) -> None:
        reply_to = msg.origin or msg.src
        try:
            req = RegistrationRequest.from_bytes(self.world.curve, msg.payload)
            resp, record = ad_process_registration(req, self.state, self.clock, self.rng)
        except (MessageError, ProtocolReject) as exc:
            reason = exc.reason.value if isinstance(exc, ProtocolReject) else Reason.MALFORMED.value
            self.log("registration", "reject", reason=reason, adversarial=msg.adversarial)
            self.world.send(self.name, reply_to, RegistrationReject(reason), SECURE)
            return
        self.log("registration", "accept", id=record.id.hex(), adversarial=msg.adversarial)
        self.world.send(self.name, reply_to, resp, SECURE)


class ServiceManager(Actor):
    actor_class = "sm"

    def __init__(self, world: World, name: str, region: int, state: SmState):
        super().__init__(world, name)
        self.region = region
        self.state = state
        self.view: LedgerView | None = None
        self.sessions: dict[tuple[bytes, int, int], bytes] = {}
        self.unconfirmed: dict[AuthRecord, int] = {}

    def rebroadcast(self) -> None:
        """Re-send auth results the region's ledger copy still lacks (e.g. a peer was down)."""
        interval = self.world.config.consensus_interval_ms
        self.world.schedule(self.world.now + interval, self.rebroadcast)
        chain = self.view.chain
        for record, sent_at in list(self.unconfirmed.items()):
            if chain.has_record(record):
                del self.unconfirmed[record]
            elif self.world.now - sent_at >= interval:
                for region in self.world.regions:
                    self.world.send(self.name, region.wp.name, AuthResult(record), SECURE)

    def _reply(self, msg: NetMessage, payload) -> None:
        dst = msg.origin or msg.src
        if msg.via:
            self.world.send(self.name, msg.via, payload, SECURE, final_dst=dst)
        else:
            self.world.send(self.name, dst, payload, OPEN)

    def handle(self, msg: NetMessage) -> None:
        kind = msg.kind
        if kind == "auth_request":
            self._on_auth_request(msg)
        elif kind == "handoff_request":
            self._on_handoff(msg)
        else:
            self.log("recv", "ignored", kind=kind)

    def _on_auth_request(self, msg: NetMessage) -> None:
        curve = self.world.curve
        with opcount.counting() as ops:
            try:
                req = AuthRequest.from_bytes(curve, msg.payload)
            except MessageError as exc:
                self.log("auth_verify", "reject", reason=Reason.MALFORMED.value, detail=str(exc),
                         adversarial=msg.adversarial)
                return
            try:
                resp, key, record = sm_verify_auth_request(req, self.state, self.view, self.clock,
                                                           self.rng)
            except ProtocolReject as exc:
                self.log("auth_verify", "reject", reason=exc.reason.value,
                         session=session_label(req.id, req.t), ops=_ops(ops),
                         adversarial=msg.adversarial)
                return
        payload = resp.to_bytes(curve)
        self.sessions[(req.id, req.t, resp.t)] = key
        self.log("auth_verify", "accept", session=session_label(req.id, req.t), t_sm=resp.t,
                 ops=_ops(ops), tokens_in=token_count(msg.payload), tokens_out=token_count(payload),
                 adversarial=msg.adversarial)
        self.world.accepted.append((self.world.now, record))
        self._reply(msg, payload)
        self.unconfirmed[record] = self.world.now
        for region in self.world.regions:
            self.world.send(self.name, region.wp.name, AuthResult(record), SECURE)

    def _on_handoff(self, msg: NetMessage) -> None:
        try:
            req = HandoffRequest.from_bytes(self.world.curve, msg.payload)
        except MessageError as exc:
            self.log("handoff", Verdict.DENY.value, reason=f"malformed: {exc}",
                     adversarial=msg.adversarial)
            self._reply(msg, HandoffResponse(Verdict.DENY.value))
            return
        decision = sm_process_handoff(req, self.state, self.view, self.world.revocations)
        self.log("handoff", decision.verdict.value, reason=decision.reason,
                 adversarial=msg.adversarial, obu=msg.origin)
        self._reply(msg, HandoffResponse(decision.verdict.value))


class Vehicle(Actor):
    actor_class = "obu"

    def __init__(self, world: World, index: int, region: int):
        super().__init__(world, f"obu:{index}")
        self.index = index
        self.region = region
        self.identity: bytes | None = None
        self.cred: Credential | None = None
        self.pending: PendingAuth | None = None
        self.pending_sm: ServiceManager | None = None
        self.sessions: dict[tuple[bytes, int, int], bytes] = {}
        self.served_in: set[int] = set()

    @property
    def rsu(self) -> str:
        return self.world.rsu_for(self)

    def start_registration(self) -> None:
        if self.cred is not None:
            return
        self.identity = new_identity(self.rng)
        req = obu_begin_registration(self.identity, self.clock, self.world.ad.state.keypair.pk, self.rng)
        self.log("registration_request", id=self.identity.hex())
        self.world.send(self.name, self.rsu, req, OPEN)

    def start_auth(self) -> None:
        if self.cred is None:
            self.log("auth_request", "skipped", reason="not registered")
            return
        sm = self.world.regions[self.region].sm
        with opcount.counting() as ops:
            req, pending = obu_create_auth_request(self.cred, self.clock, self.rng)
        payload = req.to_bytes(self.world.curve)
        self.pending, self.pending_sm = pending, sm
        self.log("auth_request", session=session_label(req.id, req.t), sm=sm.name, ops=_ops(ops),
                 tokens_out=token_count(payload))
        self.world.send(self.name, self.rsu, payload, OPEN)

    def move(self, region: int) -> None:
        old, self.region = self.region, region
        self.log("move", frm=old, to=region)
        if self.cred is None:
            return
        sm = self.world.regions[region].sm
        req = obu_create_handoff(self.cred, sm.state.keypair.pk, self.rng)
        self.world.send(self.name, self.rsu, req, OPEN)

    def handle(self, msg: NetMessage) -> None:
        kind = msg.kind
        curve = self.world.curve
        if kind == "registration_response":
            if self.cred is not None:
                return
            resp = RegistrationResponse.from_bytes(curve, msg.payload)
            self.cred = Credential.from_response(self.identity, resp)
            self.log("registered", id=self.identity.hex())
            if self.world.config.auto_auth:
                self.start_auth()
        elif kind == "registration_reject":
            if self.cred is not None:
                return
            # no automatic retry: a replayed request also draws duplicate-id
            reason = RegistrationReject.from_bytes(curve, msg.payload).reason
            self.log("registered", "reject", reason=reason)
        elif kind == "auth_response":
            self._on_auth_response(msg)
        elif kind == "handoff_response":
            try:
                verdict = HandoffResponse.from_bytes(curve, msg.payload).verdict
            except MessageError:
                verdict = "malformed"
            self.log("handoff_result", verdict, region=self.region, adversarial=msg.adversarial)
            if verdict == Verdict.GRANT.value:
                self.served_in.add(self.region)
            elif verdict == Verdict.REQUIRE_FULL_AUTH.value:
                self.start_auth()
        else:
            self.log("recv", "ignored", kind=kind)

    def _on_auth_response(self, msg: NetMessage) -> None:
        if self.pending is None:
            self.log("auth_complete", "reject", reason="no-pending", adversarial=msg.adversarial)
            return
        pending, sm = self.pending, self.pending_sm
        label = session_label(self.cred.id, pending.t_obu)
        with opcount.counting() as ops:
            try:
                resp = AuthResponse.from_bytes(self.world.curve, msg.payload)
                cfg = self.world.config
                key = obu_verify_auth_response(resp, pending, self.cred, sm.state.keypair.pk,
                                               self.clock, cfg.window_ms,
                                               abs(cfg.skew("obu") - cfg.skew("sm")))
            except MessageError as exc:
                pending.consumed = True
                self.pending = None
                self.log("auth_complete", "reject", reason=Reason.MALFORMED.value, detail=str(exc),
                         session=label, adversarial=msg.adversarial)
                return
            except ProtocolReject as exc:
                self.pending = None
                self.log("auth_complete", "reject", reason=exc.reason.value, session=label,
                         ops=_ops(ops), adversarial=msg.adversarial)
                return
        self.pending = None
        self.sessions[(self.cred.id, pending.t_obu, resp.t)] = key
        self.served_in.add(self.region)
        self.log("auth_complete", "accept", session=label, t_sm=resp.t, sm=sm.name, ops=_ops(ops),
                 tokens_in=token_count(msg.payload), adversarial=msg.adversarial)


class WitnessPeer(Actor):
    actor_class = "wp"

    def __init__(self, world: World, name: str, region: int, state: WpState):
        super().__init__(world, name)
        self.region = region
        self.state = state
        self.round: dict | None = None

    def fault(self) -> str | None:
        for f in self.world.config.wp_faults:
            if f.region == self.region and f.active(self.world.now):
                return f.kind
        return None

    @property
    def peers(self) -> list[WitnessPeer]:
        return [r.wp for r in self.world.regions if r.wp is not self]

    def tick(self) -> None:
        interval = self.world.config.consensus_interval_ms
        self.world.schedule(self.world.now + interval, self.tick)
        fault = self.fault()
        if fault == "crash" or not self.state.is_speaker or self.round is not None:
            return
        req = speaker_propose(self.state, self.clock)
        if req is None:
            return
        if fault == "byzantine":
            req = self._forged_candidate(req)
        self.round = {"req": req, "votes": {}}
        self.log("propose", h=req.h, block_hash=req.block.block_hash.hex(),
                 records=len(req.block.records))
        if not self.peers:
            self._tally()
            return
        for peer in self.peers:
            self.world.send(self.name, peer.name, req, SECURE)
        self.world.schedule(self.world.now + max(1, interval // 2), self._tally)

    def _forged_candidate(self, req: VoteRequest) -> VoteRequest:
        fake = AuthRecord(self.rng.getrandbits(256).to_bytes(32, "big"),
                          self.rng.getrandbits(128).to_bytes(16, "big"), b"\x00" * 16, 0, 0)
        block = Block.build(req.h, req.block.prev_hash, req.block.created_at,
                            (*req.block.records, fake))
        sig = self.state.members.sign(self.state.wp_id, b"P_req", req.h, block.block_hash)
        return VoteRequest(req.h, req.speaker_id, block, sig)

    def _tally(self) -> None:
        rnd, self.round = self.round, None
        if rnd is None:
            return
        req = rnd["req"]
        block = speaker_tally(req, rnd["votes"].values(), self.state.members)
        if block is None:
            self.log("abort", h=req.h, votes=len(rnd["votes"]), quorum=self.state.members.quorum)
            return
        if not apply_commit(self.state, block):
            self.log("abort", "refused", h=req.h)
            return
        self.log("commit", h=block.height, block_hash=block.block_hash.hex(),
                 records=len(block.records), block=block.to_bytes().hex())
        for peer in self.peers:
            self.world.send(self.name, peer.name, BlockCommit(block), SECURE)

    def recover(self) -> None:
        self.log("recover", h=self.state.height)
        for peer in self.peers:
            self.world.send(self.name, peer.name, SyncRequest(self.state.height), SECURE)

    def handle(self, msg: NetMessage) -> None:
        fault = self.fault()
        kind = msg.kind
        if fault == "crash":
            self.log("recv", "ignored", kind=kind, reason="crashed")
            return
        curve = self.world.curve
        if kind == "auth_result":
            self.state.receive(AuthResult.from_bytes(curve, msg.payload).record)
        elif kind == "P_req":
            req = VoteRequest.from_bytes(curve, msg.payload)
            if fault == "byzantine":
                bogus = bytes(b ^ 0xFF for b in req.block.block_hash)
                vote = VoteResponse(req.h, self.state.wp_id, bogus,
                                    self.state.members.sign(self.state.wp_id, P_RES, req.h, bogus))
            else:
                vote = wp_vote(self.state, req)
            self.log("vote", "yes" if vote else "refuse", h=req.h)
            if vote is not None:
                self.world.send(self.name, msg.src, vote, SECURE)
        elif kind == "P_res":
            vote = VoteResponse.from_bytes(curve, msg.payload)
            if self.round is not None and vote.h == self.round["req"].h:
                self.round["votes"][vote.voter_id] = vote
                if len(self.round["votes"]) == len(self.peers):
                    self._tally()
        elif kind == "block_commit":
            block = BlockCommit.from_bytes(curve, msg.payload).block
            if apply_commit(self.state, block):
                self.log("append", h=block.height, block_hash=block.block_hash.hex())
            else:
                self.log("append", "refused", h=block.height)
                if block.height > self.state.height:
                    self.world.send(self.name, msg.src, SyncRequest(self.state.height), SECURE)
        elif kind == "sync_request":
            h = SyncRequest.from_bytes(curve, msg.payload).h
            if h < self.state.height:
                self.world.send(self.name, msg.src, ChainSync(tuple(self.state.chain)[h:]), SECURE)
        elif kind == "chain_sync":
            added = 0
            for block in ChainSync.from_bytes(curve, msg.payload).blocks:
                if block.height == self.state.height and apply_commit(self.state, block):
                    added += 1
            if added:
                self.log("sync", h=self.state.height, added=added)


@dataclass
class Region:
    index: int
    sm: ServiceManager
    wp: WitnessPeer
    rsus: list[Rsu]


class World:
    def __init__(self, config: ScenarioConfig, actions: list[AdversaryAction] | None = None):
        self.config = config
        self.curve = get_curve(config.curve)
        self.now = 0
        self._queue: list = []
        self._seq = 0
        self._msg_id = 0
        self.trace = EventTrace()
        self.accepted: list[tuple[int, AuthRecord]] = []  # (time, record) of each SM success
        self.open_sent: dict[int, NetMessage] = {}
        self.open_delivered: set[int] = set()
        self.open_dropped: set[int] = set()
        self.open_in_flight: set[int] = set()
        self._net_rng = random.Random(f"{config.seed}:net")
        self.revocations = RevocationList()

        _, ad_keys = setup(config.curve, config.seed)
        self.ad = AuditDepartment(self, AdState(self.curve, ad_keys, config.window_ms))
        self.actors: dict[str, Actor] = {"ad": self.ad}

        ids_rng = random.Random(f"{config.seed}:ids")
        wp_members = tuple((new_identity(ids_rng), ids_rng.getrandbits(256).to_bytes(32, "big"))
                           for _ in range(config.regions))
        self.members = Membership(wp_members)
        self.regions: list[Region] = []
        for r in range(config.regions):
            sm_id = new_identity(ids_rng)
            resp = self.ad.register_direct(sm_id)
            sm_state = SmState(sm_id, KeyPair(resp.sk, resp.pk), config.window_ms, config.replay_cache)
            sm = ServiceManager(self, f"sm:{r}", r, sm_state)
            wp = WitnessPeer(self, f"wp:{r}", r, WpState(wp_members[r][0], self.members))
            sm.view = LedgerView(self.ad.state.registry, wp.state.chain)
            rsus = [Rsu(self, f"rsu:{r}.{k}", r) for k in range(config.rsus_per_region)]
            self.regions.append(Region(r, sm, wp, rsus))
            for a in (sm, wp, *rsus):
                self.actors[a.name] = a
        self.obus = [Vehicle(self, i, i % config.regions) for i in range(config.obus)]
        for v in self.obus:
            self.actors[v.name] = v

        self.trace.log(0, "world", "built", regions=config.regions, obus=config.obus,
                       seed=config.seed, curve=self.curve.curve_id.value,
                       ad_pk=self.ad.state.keypair.pk.to_bytes().hex(),
                       members=[[w.hex(), k.hex()] for w, k in wp_members],
                       sm_pks=[r.sm.state.keypair.pk.to_bytes().hex() for r in self.regions])

        scripted = list(actions or [])
        if config.adversary_script:
            scripted += load_script(config.adversary_script)
        scripted += [AdversaryAction.from_dict(a) for a in config.adversary]
        self.adversary: Adversary | None = None
        for a in scripted:
            self.inject_adversary(a)

        for v in self.obus:
            self.schedule(config.register_at + v.index * config.register_spacing_ms,
                          v.start_registration)
        for region in self.regions:
            self.schedule(config.consensus_interval_ms, region.wp.tick)
            self.schedule(config.consensus_interval_ms, region.sm.rebroadcast)
        for mv in config.moves:
            self.move_vehicle(mv.obu, mv.region, mv.at)
        for ev in config.reauths:
            self.schedule(ev.at, self.obus[ev.obu].start_auth)
        for ev in config.revocations:
            self.schedule(ev.at, lambda i=ev.obu: self.revoke(i))
        for f in config.wp_faults:
            if f.until is not None and f.kind == "crash":
                self.schedule(f.until, self.regions[f.region].wp.recover)

    # -- scheduling and transport -----------------------------------------

    def schedule(self, at: int, fn: Callable[[], None]) -> None:
        if at < self.now:
            raise SimulationError(f"cannot schedule in the past ({at} < {self.now})")
        heapq.heappush(self._queue, (at, self._seq, fn))
        self._seq += 1

    def latency(self) -> int:
        c = self.config
        jitter = self._net_rng.randint(-c.latency_jitter_ms, c.latency_jitter_ms) if c.latency_jitter_ms else 0
        return c.latency_base_ms + jitter

    def _new_msg(self, src, dst, payload, channel, **kw) -> NetMessage:
        self._msg_id += 1
        return NetMessage(self._msg_id, src, dst, payload, channel, self.now, **kw)

    def send(self, src: str, dst: str, msg, channel: str, **kw) -> None:
        payload = msg if isinstance(msg, bytes) else msg.to_bytes(self.curve)
        net = self._new_msg(src, dst, payload, channel, **kw)
        if channel == OPEN:
            self.open_sent[net.msg_id] = net
            self.trace.log(self.now, src, "send", "ok", msg_id=net.msg_id, dst=dst, kind=net.kind,
                           tokens=token_count(payload), adversarial=net.adversarial)
            if self.adversary is not None:
                net = self.adversary.intercept(self, net)
                if net is None:
                    return
            self.open_in_flight.add(net.msg_id)
        self.schedule(self.now + self.latency(), lambda m=net: self._deliver(m))

    def schedule_injection(self, at: int, src: str, dst: str, payload: bytes, origin: str) -> None:
        """Adversary transmits ``payload`` on the radio link at time ``at``."""
        def fire():
            net = self._new_msg(src, dst, payload, OPEN, adversarial=True, origin=origin)
            self.open_sent[net.msg_id] = net
            self.trace.log(self.now, "adversary", "inject", "ok", msg_id=net.msg_id, src=src,
                           dst=dst, kind=net.kind, origin=origin)
            self.open_in_flight.add(net.msg_id)
            self.schedule(self.now + self.latency(), lambda m=net: self._deliver(m))
        self.schedule(at, fire)

    def note_dropped(self, msg: NetMessage) -> None:
        self.open_dropped.add(msg.msg_id)

    def _deliver(self, msg: NetMessage) -> None:
        if msg.channel == OPEN:
            self.open_in_flight.discard(msg.msg_id)
            self.open_delivered.add(msg.msg_id)
            self.trace.log(self.now, msg.dst, "recv", "ok", msg_id=msg.msg_id, kind=msg.kind,
                           adversarial=msg.adversarial)
        actor = self.actors.get(msg.dst)
        if actor is None:
            self.trace.log(self.now, msg.dst, "recv", "no-such-actor", msg_id=msg.msg_id)
            return
        try:
            actor.handle(msg)
        except MessageError as exc:
            self.trace.log(self.now, msg.dst, "recv", "malformed", kind=msg.kind, detail=str(exc),
                           adversarial=msg.adversarial)

    # -- scenario controls --------------------------------------------------

    def rsu_for(self, v: Vehicle) -> str:
        rsus = self.regions[v.region].rsus
        return rsus[v.index % len(rsus)].name

    def _obu(self, obu: int | str) -> Vehicle:
        if isinstance(obu, str) and obu.startswith("obu:"):
            obu = int(obu[4:])
        if not isinstance(obu, int) or not 0 <= obu < len(self.obus):
            raise SimulationError(f"unknown obu {obu!r}")
        return self.obus[obu]

    def move_vehicle(self, obu: int | str, region: int, at: int) -> None:
        v = self._obu(obu)
        if not 0 <= region < len(self.regions):
            raise SimulationError(f"unknown region {region!r}")
        self.schedule(at, lambda: v.move(region))

    def revoke(self, obu: int | str) -> None:
        v = self._obu(obu)
        if v.cred is None:
            self.trace.log(self.now, "ad", "revoke", "skipped", obu=v.name)
            return
        self.revocations.revoke(v.cred.l)
        self.trace.log(self.now, "ad", "revoke", "ok", obu=v.name)

    def inject_adversary(self, action: AdversaryAction) -> None:
        if action.target is not None and action.target.kind not in OPEN_KINDS:
            raise AdversaryError(f"cannot target {action.target.kind}: not an open-channel message")
        if self.adversary is None:
            self.adversary = Adversary([], random.Random(f"{self.config.seed}:adversary"))
        self.adversary.add(action)
        self.trace.log(self.now, "adversary", "script", "ok", action=action.to_dict())
        if action.kind == "impersonate" and action.role == "obu":
            self._obu(action.obu)
            self.schedule(max(action.at, self.now),
                          lambda a=action: self.adversary.forge_requests(self, a))

    def run_until(self, t_end: int) -> EventTrace:
        if t_end < self.now:
            raise SimulationError("t_end is before the current time")
        while self._queue and self._queue[0][0] <= t_end:
            at, _, fn = heapq.heappop(self._queue)
            self.now = at
            fn()
        self.now = t_end
        return self.trace

    @property
    def wps(self) -> list[WitnessPeer]:
        return [r.wp for r in self.regions]

    @property
    def sms(self) -> list[ServiceManager]:
        return [r.sm for r in self.regions]

    def chain_digest(self) -> str:
        """Hash over every peer's exported chain, for determinism checks."""
        return h1(b"".join(wp.state.chain.to_bytes() for wp in self.wps)).hex()


def build_world(config: ScenarioConfig, actions: list[AdversaryAction] | None = None) -> World:
    return World(config, actions)


def run_until(world: World, t_end: int) -> EventTrace:
    return world.run_until(t_end)


def move_vehicle(world: World, obu_id: int | str, region_id: int, at: int) -> None:
    world.move_vehicle(obu_id, region_id, at)


def inject_adversary(world: World, action: AdversaryAction) -> None:
    world.inject_adversary(action)


def chain_from_trace(trace: EventTrace) -> Chain:
    """Rebuild the committed chain from ``commit`` events (first commit per height wins)."""
    built = trace.select("built")
    if not built:
        raise ValueError("trace has no world header")
    members = Membership(tuple((bytes.fromhex(w), bytes.fromhex(k)) for w, k in built[0]["members"]))
    by_height: dict[int, Block] = {}
    for e in trace.select("commit"):
        if e["h"] in by_height:
            continue
        try:
            by_height[e["h"]] = Block.from_bytes(bytes.fromhex(e["block"]))
        except (ValueError, KeyError) as exc:
            raise LedgerError(f"commit event for height {e['h']} is unreadable: {exc}", e["h"]) from exc
    return Chain.unchecked(members, [by_height[h] for h in sorted(by_height)])
