import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from vfcauth.consensus import (
    ConsensusError,
    WpState,
    apply_commit,
    catch_up,
    run_consensus_round,
    speaker_propose,
    speaker_tally,
    wp_vote,
)
from vfcauth.ledger import validate_chain
from vfcauth.membership import P_REQ, commit_quorum, select_speaker
from vfcauth.messages import VoteRequest

from helpers import build_chain, deliver, make_wps, record


def speaker_of(wps):
    h = wps[0].height
    return next(w for w in wps if w.members.speaker(h) == w.wp_id)


@pytest.mark.parametrize("h,n,x", [(0, 4, 1), (7, 4, 4), (5, 1, 1), (9, 3, 1)])
def test_select_speaker(h, n, x):
    assert select_speaker(h, n) == x


@given(st.integers(0, 10 ** 6), st.integers(1, 50))
def test_select_speaker_range(h, n):
    assert 1 <= select_speaker(h, n) <= n


def test_select_speaker_needs_peers():
    with pytest.raises(ValueError):
        select_speaker(0, 0)


@pytest.mark.parametrize("n,q", [(1, 0), (2, 1), (3, 2), (4, 3), (7, 5), (10, 7)])
def test_quorum(n, q):
    assert commit_quorum(n) == q


def test_propose_packs_pending_in_order():
    wps = make_wps(4)
    recs = [record(i) for i in range(3)]
    deliver(wps, recs)
    sp = speaker_of(wps)
    req = speaker_propose(sp, 100)
    assert list(req.block.records) == recs
    assert req.block.prev_hash == sp.chain.head_hash
    other = next(w for w in wps if w is not sp)
    with pytest.raises(ConsensusError):
        speaker_propose(other, 100)
    assert speaker_propose(make_wps(4)[0], 1) is None


def test_votes():
    wps = make_wps(4)
    deliver(wps, [record(1)])
    sp = speaker_of(wps)
    voters = [w for w in wps if w is not sp]
    req = speaker_propose(sp, 5)
    votes = [wp_vote(w, req) for w in voters]
    assert all(v and v.block_hash == req.block.block_hash for v in votes)
    assert wp_vote(sp, req) is None  # speaker does not vote

    stranger = make_wps(4)[1]  # never received the record
    assert wp_vote(stranger, req) is None

    unknown = record(77)
    sp.receive(unknown)
    assert wp_vote(voters[0], speaker_propose(sp, 6)) is None

    wrong = next(w for w in voters)
    wrong.receive(record(1))
    fake = dataclasses.replace(req, speaker_id=wrong.wp_id,
                               speaker_sig=wrong.members.sign(wrong.wp_id, P_REQ, 0, req.block.block_hash))
    assert wp_vote(voters[1], fake) is None
    assert wp_vote(voters[1], dataclasses.replace(req, speaker_sig=bytes(32))) is None
    assert wp_vote(voters[1], dataclasses.replace(req, h=1)) is None


def test_tally_threshold():
    wps = make_wps(4)
    deliver(wps, [record(1)])
    sp = speaker_of(wps)
    req = speaker_propose(sp, 5)
    votes = [wp_vote(w, req) for w in wps if w is not sp]
    assert speaker_tally(req, votes, sp.members) is not None
    assert speaker_tally(req, votes[:2], sp.members) is None
    assert speaker_tally(req, votes[:2] + [votes[0]], sp.members) is None  # duplicate voter
    assert speaker_tally(req, votes[:2] + [None], sp.members) is None


def test_single_peer_commits_without_votes():
    wps = make_wps(1)
    deliver(wps, [record(1)])
    assert run_consensus_round(wps, 1) is not None
    assert wps[0].height == 1 and not wps[0].pending


def test_two_peers_commit():
    wps = make_wps(2)
    deliver(wps, [record(1)])
    assert run_consensus_round(wps, 1) is not None
    assert [w.height for w in wps] == [1, 1]


def test_honest_round_commits_everywhere():
    wps = make_wps(4)
    deliver(wps, [record(i) for i in range(5)])
    block = run_consensus_round(wps, 1000)
    assert block is not None and len(block.records) == 5
    assert {w.chain.head_hash for w in wps} == {block.block_hash}
    assert all(not w.pending for w in wps)
    assert run_consensus_round(wps, 2000) is None  # nothing pending: no empty block


def test_crashed_peer_blocks_quorum_until_recovery():
    wps = make_wps(4)
    deliver(wps, [record(1)])
    crashed = next(w for w in wps if w.members.speaker(0) != w.wp_id)
    assert run_consensus_round(wps, 1, {crashed.wp_id: "crash"}) is None
    assert all(w.pending for w in wps)
    assert run_consensus_round(wps, 2) is not None


def test_crashed_peer_catches_up():
    wps = make_wps(7)
    deliver(wps, [record(1)])
    late = next(w for w in wps if w.members.speaker(0) != w.wp_id and w.members.speaker(1) != w.wp_id)
    assert run_consensus_round(wps, 1, {late.wp_id: "crash"}) is not None
    assert late.height == 0
    deliver(wps, [record(2)])
    assert run_consensus_round(wps, 2) is not None
    assert late.height == 2 and late.chain.to_bytes() == wps[0].chain.to_bytes()


def test_catch_up_revalidates():
    src = build_chain(3)[0]
    fresh = WpState(src.wp_id, src.members)
    assert catch_up(fresh, src.chain) == 3
    again = WpState(src.wp_id, src.members)
    blocks = list(src.chain)
    blocks[1] = dataclasses.replace(blocks[1], signatures=())
    from vfcauth.ledger import Chain
    assert catch_up(again, Chain.unchecked(src.members, blocks)) == 1


def test_byzantine_voter_excluded_chain_consistent():
    wps = make_wps(7)  # quorum 5 of 6 congressmen: one liar still lets it commit
    deliver(wps, [record(1)])
    liar = next(w for w in wps if w.members.speaker(0) != w.wp_id)
    block = run_consensus_round(wps, 1, {liar.wp_id: "byzantine"})
    assert block is not None
    assert liar.wp_id not in dict(block.signatures)
    assert len({w.chain.head_hash for w in wps}) == 1


def test_byzantine_among_four_stays_safe():
    wps = make_wps(4)
    deliver(wps, [record(1)])
    liar = next(w for w in wps if w.members.speaker(0) != w.wp_id)
    assert run_consensus_round(wps, 1, {liar.wp_id: "byzantine"}) is None
    assert all(w.height == 0 for w in wps)


def test_apply_commit_refuses_bad_block():
    wps = make_wps(4)
    deliver(wps, [record(1)])
    sp = speaker_of(wps)
    req = speaker_propose(sp, 1)
    assert not apply_commit(wps[0], req.block)  # unsigned candidate
    assert wps[0].pending


@settings(max_examples=15, deadline=None)
@given(n=st.integers(1, 7), m=st.integers(1, 4), seed=st.integers(0, 1000))
def test_rotation_over_n_times_m_rounds(n, m, seed):
    wps = make_wps(n, seed)
    counts = [0] * n
    for r in range(n * m):
        h = wps[0].height
        idx = select_speaker(h, n)
        counts[idx - 1] += 1
        deliver(wps, [record(seed * 1000 + r)])
        block = run_consensus_round(wps, r)
        assert block.proposer == wps[0].members.ids[idx - 1]
        assert block.height == h
    assert counts == [m] * n
    assert all(validate_chain(w.chain) is None for w in wps)
