"""Invariant checks over a finished (or paused) world."""

from __future__ import annotations

from dataclasses import dataclass, field

from vfcauth.ledger import validate_chain
from vfcauth.simnet.trace import EventTrace
from vfcauth.simnet.world import World

ACCEPTING = ("accept", "grant")


@dataclass
class CheckReport:
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def extend(self, other: CheckReport) -> CheckReport:
        self.problems.extend(other.problems)
        return self


def key_agreement(world: World, *, require_all: bool = True) -> CheckReport:
    """Every OBU-side session key equals the SM-side key of the same session."""
    rep = CheckReport()
    sm_keys = {}
    for sm in world.sms:
        sm_keys.update(sm.sessions)
    for v in world.obus:
        if require_all and not v.sessions:
            rep.problems.append(f"{v.name} has no session key")
        for sid, key in v.sessions.items():
            if sm_keys.get(sid) != key:
                rep.problems.append(f"{v.name}: session {sid[0].hex()}:{sid[1]} keys disagree")
    return rep


def commits_once(world: World) -> CheckReport:
    """Every successful authentication sits in exactly one committed block of every peer.

    Results younger than the liveness bound ``m*t`` may still be pending; they
    only must not appear twice.
    """
    rep = CheckReport()
    cfg = world.config
    settled = world.now - cfg.rounds_per_speaker * cfg.consensus_interval_ms
    for wp in world.wps:
        counts: dict = {}
        for block in wp.state.chain:
            for r in block.records:
                counts[r] = counts.get(r, 0) + 1
        for at, record in world.accepted:
            c = counts.get(record, 0)
            if c > 1 or (c == 0 and at <= settled):
                rep.problems.append(
                    f"{wp.name}: record for {record.obu_id.hex()}@{record.t_obu} committed {c} times")
    return rep


def chain_consistency(world: World) -> CheckReport:
    """Peer chains validate and agree on every height they share."""
    rep = CheckReport()
    chains = [wp.state.chain for wp in world.wps]
    for wp, chain in zip(world.wps, chains):
        bad = validate_chain(chain)
        if bad is not None:
            rep.problems.append(f"{wp.name}: chain invalid from height {bad}")
    longest = max(chains, key=len)
    for wp, chain in zip(world.wps, chains):
        for i, block in enumerate(chain):
            if block.block_hash != longest[i].block_hash:
                rep.problems.append(f"{wp.name}: fork at height {i}")
                break
    return rep


def conservation(world: World) -> CheckReport:
    """Each open-channel message was delivered, dropped, or is still in flight."""
    rep = CheckReport()
    sent = set(world.open_sent)
    fates = (world.open_delivered, world.open_dropped, world.open_in_flight)
    accounted = set().union(*fates)
    if accounted != sent:
        lost = sorted(sent - accounted)
        rep.problems.append(f"open messages unaccounted for: {lost[:10]}")
    for i, a in enumerate(fates):
        for b in fates[i + 1:]:
            both = a & b
            if both:
                rep.problems.append(f"messages with two fates: {sorted(both)[:10]}")
    return rep


def accepted_adversarial(trace: EventTrace) -> list[dict]:
    """Trace events where an actor accepted a message the adversary had touched."""
    return [e for e in trace if e.get("adversarial") and e["outcome"] in ACCEPTING]


def leaked_keys(world: World) -> set[bytes]:
    """Honest session keys that the adversary could compute from what it observed."""
    if world.adversary is None:
        return set()
    honest = set()
    for actor in (*world.obus, *world.sms):
        honest.update(actor.sessions.values())
    return honest & world.adversary.derived_keys()


def honest_run(world: World) -> CheckReport:
    rep = key_agreement(world)
    rep.extend(commits_once(world)).extend(chain_consistency(world)).extend(conservation(world))
    return rep


def attack_run(world: World) -> CheckReport:
    """Safety under attack: no accepted forgeries, no learned keys, consistent chains."""
    rep = CheckReport()
    for e in accepted_adversarial(world.trace):
        rep.problems.append(f"accepted adversarial message: t={e['t']} {e['actor']} {e['event']}")
    if leaked_keys(world):
        rep.problems.append("adversary derived an honest session key")
    rep.extend(key_agreement(world, require_all=False))
    rep.extend(chain_consistency(world)).extend(conservation(world))
    return rep
