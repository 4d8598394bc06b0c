"""Builders shared by the ledger and consensus tests."""

import random

from vfcauth.consensus import WpState, run_consensus_round
from vfcauth.ledger import AuthRecord
from vfcauth.membership import Membership


def make_members(n, seed=0):
    rng = random.Random(seed)
    return Membership(tuple((rng.randbytes(16), rng.randbytes(32)) for _ in range(n)))


def make_wps(n, seed=0):
    members = make_members(n, seed)
    return [WpState(w, members) for w in members.ids]


def record(i, rng=None):
    rng = rng or random.Random(i)
    return AuthRecord(rng.randbytes(32), rng.randbytes(16), rng.randbytes(16), i, i + 1)


def deliver(wps, records):
    for wp in wps:
        for r in records:
            wp.receive(r)


def build_chain(n_blocks, n_wps=4, per_block=2, seed=0):
    """Commit ``n_blocks`` blocks through honest rounds; returns the peers."""
    wps = make_wps(n_wps, seed)
    k = 0
    for h in range(n_blocks):
        recs = [record(k + j) for j in range(per_block)]
        k += per_block
        deliver(wps, recs)
        assert run_consensus_round(wps, clock=1000 * (h + 1)) is not None
    return wps
