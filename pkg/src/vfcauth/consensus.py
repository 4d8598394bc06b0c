"""Speaker/congressmen voting that turns pending auth results into committed blocks.

One round is: the speaker for the current height packs its pending records
into a candidate block and asks the congressmen to vote (``P_req``); each
congressman checks the candidate against its own memory and answers with a
tagged vote (``P_res``); the speaker commits once a quorum of valid votes is
in, and every peer appends the signed block.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from vfcauth.ledger import AuthRecord, Block, Chain, LedgerError
from vfcauth.membership import P_REQ, P_RES, Membership, commit_quorum, select_speaker
from vfcauth.messages import VoteRequest, VoteResponse

log = logging.getLogger(__name__)

DEFAULT_INTERVAL_MS = 1000
DEFAULT_ROUNDS_PER_SPEAKER = 4

__all__ = [
    "ConsensusError", "WpState", "select_speaker", "commit_quorum", "speaker_propose", "wp_vote",
    "speaker_tally", "apply_commit", "catch_up", "run_consensus_round",
]


class ConsensusError(Exception):
    pass


@dataclass
class WpState:
    wp_id: bytes
    members: Membership
    chain: Chain = None
    pending: dict[AuthRecord, None] = field(default_factory=dict)

    def __post_init__(self):
        if self.chain is None:
            self.chain = Chain(self.members)
        if self.members.key(self.wp_id) is None:
            raise ValueError("witness peer is not a member")

    @property
    def height(self) -> int:
        return self.chain.height

    @property
    def is_speaker(self) -> bool:
        return self.members.speaker(self.height) == self.wp_id

    def receive(self, record: AuthRecord) -> bool:
        """Store a broadcast auth result; False if it is already known or committed."""
        if record in self.pending or self.chain.has_record(record):
            return False
        self.pending[record] = None
        return True


def speaker_propose(wp: WpState, clock: int) -> VoteRequest | None:
    """Build the candidate for the current height, or None when nothing is pending."""
    if not wp.is_speaker:
        raise ConsensusError(f"{wp.wp_id.hex()} is not the speaker at height {wp.height}")
    if not wp.pending:
        return None
    block = Block.build(wp.height, wp.chain.head_hash, clock, wp.pending)
    sig = wp.members.sign(wp.wp_id, P_REQ, wp.height, block.block_hash)
    return VoteRequest(wp.height, wp.wp_id, block, sig)


def _request_problem(wp: WpState, req: VoteRequest) -> str | None:
    block = req.block
    if req.h != wp.height or block.height != req.h:
        return "height mismatch"
    if req.speaker_id != wp.members.speaker(req.h):
        return "wrong speaker"
    if req.speaker_id == wp.wp_id:
        return "speaker does not vote"
    if not wp.members.verify(req.speaker_id, P_REQ, req.h, block.block_hash, req.speaker_sig):
        return "bad speaker signature"
    if block.prev_hash != wp.chain.head_hash or block.compute_hash() != block.block_hash:
        return "candidate does not extend local head"
    if not block.records:
        return "empty candidate"
    missing = [r for r in block.records if r not in wp.pending]
    if missing:
        return f"{len(missing)} record(s) not in local memory"
    return None


def wp_vote(wp: WpState, req: VoteRequest) -> VoteResponse | None:
    """A congressman's yes-vote, or None to refuse."""
    problem = _request_problem(wp, req)
    if problem:
        log.debug("wp %s refuses h=%d: %s", wp.wp_id.hex(), req.h, problem)
        return None
    bh = req.block.block_hash
    return VoteResponse(req.h, wp.wp_id, bh, wp.members.sign(wp.wp_id, P_RES, req.h, bh))


def speaker_tally(req: VoteRequest, responses: Iterable[VoteResponse | None],
                  members: Membership) -> Block | None:
    """Return the signed block if enough valid congressman votes arrived, else None."""
    block = req.block
    sigs: dict[bytes, bytes] = {}
    for resp in responses:
        if resp is None or resp.voter_id == req.speaker_id or resp.voter_id in sigs:
            continue
        if resp.h != req.h or resp.block_hash != block.block_hash:
            continue
        if members.verify(resp.voter_id, P_RES, resp.h, resp.block_hash, resp.voter_sig):
            sigs[resp.voter_id] = resp.voter_sig
    if len(sigs) < members.quorum:
        return None
    ordered = tuple((w, sigs[w]) for w in members.ids if w in sigs)
    return dataclasses.replace(block, proposer=req.speaker_id, proposer_sig=req.speaker_sig,
                               signatures=ordered)


def apply_commit(wp: WpState, block: Block) -> bool:
    """Append a committed block and drop its records from memory; False if the block is refused."""
    try:
        wp.chain.append(block)
    except LedgerError as exc:
        log.debug("wp %s refuses commit: %s", wp.wp_id.hex(), exc)
        return False
    for r in block.records:
        wp.pending.pop(r, None)
    return True


def catch_up(wp: WpState, source: Chain) -> int:
    """Append blocks ``wp`` missed (e.g. while crashed) from another peer's chain.

    Every block is re-validated; returns how many were appended.
    """
    added = 0
    for block in list(source)[wp.height:]:
        if not apply_commit(wp, block):
            break
        added += 1
    return added


def _byzantine_vote(wp: WpState, req: VoteRequest) -> VoteResponse:
    bogus = bytes(b ^ 0xFF for b in req.block.block_hash)
    return VoteResponse(req.h, wp.wp_id, bogus, wp.members.sign(wp.wp_id, P_RES, req.h, bogus))


def run_consensus_round(all_wps: list[WpState], clock: int,
                        faults: Mapping[bytes, str] | None = None) -> Block | None:
    """Run one propose/vote/tally/append round synchronously.

    ``faults`` maps a peer id to ``"crash"`` (silent) or ``"byzantine"`` (votes
    for a corrupted block hash).  A crashed speaker stalls the round.
    """
    faults = faults or {}
    if not all_wps:
        raise ConsensusError("no witness peers")
    members = all_wps[0].members
    live = [wp for wp in all_wps if faults.get(wp.wp_id) != "crash"]
    if not live:
        return None
    # peers that missed blocks (e.g. after a crash) sync from the longest live chain first
    longest = max(live, key=lambda wp: wp.height)
    for wp in live:
        if wp.height < longest.height:
            catch_up(wp, longest.chain)
    h = longest.height
    speaker_id = members.speaker(h)
    speaker = next((wp for wp in live if wp.wp_id == speaker_id), None)
    if speaker is None or speaker.height != h:
        return None
    req = speaker_propose(speaker, clock)
    if req is None:
        return None
    responses = []
    for wp in all_wps:
        if wp is speaker:
            continue
        fault = faults.get(wp.wp_id)
        if fault == "crash":
            continue
        responses.append(_byzantine_vote(wp, req) if fault == "byzantine" else wp_vote(wp, req))
    block = speaker_tally(req, responses, members)
    if block is None:
        return None
    for wp in all_wps:
        if faults.get(wp.wp_id) != "crash":
            apply_commit(wp, block)
    return block
