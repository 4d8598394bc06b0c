import dataclasses
import random

import pytest

from vfcauth.crypto import opcount
from vfcauth.crypto.ec import scalar_mult
from vfcauth.crypto.encoding import encode_uint, frame, unframe
from vfcauth.crypto.primitives import (
    DecryptionError,
    HybridCiphertext,
    encode_scalar,
    h1,
    h2,
    pk_decrypt,
    xor32,
)
from vfcauth.ledger import AuthRecord, Block, Chain, LedgerView, RevocationList
from vfcauth.membership import Membership
from vfcauth.messages import AuthRequest, AuthResponse, MessageError, decode, token_count
from vfcauth.protocol import (
    Credential,
    PendingAuth,
    ProtocolReject,
    Reason,
    Verdict,
    ad_process_registration,
    is_fresh,
    obu_begin_registration,
    obu_create_auth_request,
    obu_create_handoff,
    obu_verify_auth_response,
    sm_process_handoff,
    sm_verify_auth_request,
)

from conftest import Deployment


def handshake(dep, cred, t_obu=1000, t_sm=1010, t_back=1020, rng=None):
    rng = rng or dep.rng
    req, pending = obu_create_auth_request(cred, t_obu, rng)
    resp, sm_key, record = sm_verify_auth_request(req, dep.sm, dep.view, t_sm, rng)
    obu_key = obu_verify_auth_response(resp, pending, cred, dep.sm.keypair.pk, t_back, dep.window_ms)
    return req, resp, sm_key, obu_key, record


# -- registration -------------------------------------------------------------


def test_registration_request_round_trip(deployment):
    id_ = b"V" * 16
    req = obu_begin_registration(id_, 42, deployment.ad.keypair.pk, deployment.rng)
    assert req.t_plain == 42
    inner = unframe(pk_decrypt(deployment.ad.keypair.sk, req.ciphertext), 2)
    assert inner == [id_, encode_uint(42)]
    other = obu_begin_registration(id_, 42, deployment.ad.keypair.pk, random.Random(99))
    assert other.ciphertext.to_bytes() != req.ciphertext.to_bytes()


def test_credential_algebra(curve_id):
    dep = Deployment(curve_id, seed=3)
    for _ in range(5):
        cred, reg = dep.register()
        assert reg.l == cred.l
        assert cred.keypair.pk == scalar_mult(cred.keypair.sk, dep.curve.P)
        sk_id = h1(frame(encode_scalar(dep.curve, cred.keypair.sk), cred.id))
        assert xor32(cred.l, sk_id) == h2(frame(encode_scalar(dep.curve, dep.ad.keypair.sk), cred.id))
        assert dep.ad.registry.get(cred.id) == reg


def test_duplicate_identity_rejected(deployment):
    cred, _ = deployment.register(b"D" * 16)
    req = obu_begin_registration(cred.id, 5, deployment.ad.keypair.pk, deployment.rng)
    with pytest.raises(ProtocolReject) as exc:
        ad_process_registration(req, deployment.ad, 5, deployment.rng)
    assert exc.value.reason is Reason.DUPLICATE_ID


def test_stale_registration_rejected(deployment):
    req = obu_begin_registration(b"S" * 16, 0, deployment.ad.keypair.pk, deployment.rng)
    with pytest.raises(ProtocolReject) as exc:
        ad_process_registration(req, deployment.ad, 300_001, deployment.rng)
    assert exc.value.reason is Reason.STALE
    ad_process_registration(req, deployment.ad, 300_000, deployment.rng)  # boundary is inclusive


def test_tampered_registration_rejected(deployment):
    req = obu_begin_registration(b"T" * 16, 0, deployment.ad.keypair.pk, deployment.rng)
    body = bytearray(req.ciphertext.body)
    body[0] ^= 1
    bad = dataclasses.replace(req, ciphertext=HybridCiphertext(req.ciphertext.ephemeral_point,
                                                                bytes(body), req.ciphertext.tag))
    with pytest.raises(ProtocolReject) as exc:
        ad_process_registration(bad, deployment.ad, 0, deployment.rng)
    assert exc.value.reason is Reason.MALFORMED
    outer = dataclasses.replace(req, t_plain=1)
    with pytest.raises(ProtocolReject) as exc:
        ad_process_registration(outer, deployment.ad, 0, deployment.rng)
    assert exc.value.reason is Reason.MALFORMED


# -- mutual authentication ----------------------------------------------------


def test_honest_handshake_agrees(curve_id):
    dep = Deployment(curve_id, seed=4)
    cred, _ = dep.register()
    req, resp, sm_key, obu_key, record = handshake(dep, cred)
    assert sm_key == obu_key and len(sm_key) == 32
    assert record == AuthRecord(cred.l, cred.id, dep.sm.id, 1000, 1010)
    assert dep.sm.local_db[cred.l] == record


def test_pending_token_equals_l(deployment):
    cred, _ = deployment.register()
    _, pending = obu_create_auth_request(cred, 0, deployment.rng)
    assert pending.tk == cred.l


def test_request_is_deterministic_for_fixed_seed(deployment):
    cred, _ = deployment.register()
    a = obu_create_auth_request(cred, 7, random.Random(1))[0]
    b = obu_create_auth_request(cred, 7, random.Random(1))[0]
    assert a.to_bytes(deployment.curve) == b.to_bytes(deployment.curve)


def test_sm_side_r1_pk_equals_obu_r2(deployment):
    cred, _ = deployment.register()
    r1 = 123456789
    assert scalar_mult(r1, cred.keypair.pk) == scalar_mult(cred.keypair.sk, scalar_mult(r1, deployment.curve.P))


def test_operation_counts_per_role(deployment):
    cred, _ = deployment.register()
    with opcount.counting() as obu_out:
        req, pending = obu_create_auth_request(cred, 0, deployment.rng)
    with opcount.counting() as sm:
        resp, *_ = sm_verify_auth_request(req, deployment.sm, deployment.view, 0, deployment.rng)
    with opcount.counting() as obu_in:
        obu_verify_auth_response(resp, pending, cred, deployment.sm.keypair.pk, 0)
    hashes = [c["h1"] + c["h2"] for c in (obu_out, sm, obu_in)]
    assert hashes == [2, 2, 1]
    assert [c["scalar_mult"] for c in (obu_out, sm, obu_in)] == [2, 3, 1]
    assert [c["kdf"] for c in (obu_out, sm, obu_in)] == [0, 1, 1]
    assert token_count(req.to_bytes(deployment.curve)) + token_count(resp.to_bytes(deployment.curve)) == 7


def test_flipped_auth_bit_rejected(deployment):
    cred, _ = deployment.register()
    req, _ = obu_create_auth_request(cred, 0, deployment.rng)
    bad = dataclasses.replace(req, auth=bytes([req.auth[0] ^ 1]) + req.auth[1:])
    with pytest.raises(ProtocolReject) as exc:
        sm_verify_auth_request(bad, deployment.sm, deployment.view, 0, deployment.rng)
    assert exc.value.reason is Reason.BAD_AUTH


def test_unregistered_identity_rejected(deployment):
    cred, _ = deployment.register()
    req, _ = obu_create_auth_request(cred, 0, deployment.rng)
    with pytest.raises(ProtocolReject) as exc:
        sm_verify_auth_request(dataclasses.replace(req, id=b"?" * 16), deployment.sm,
                               deployment.view, 0, deployment.rng)
    assert exc.value.reason is Reason.UNREGISTERED


def test_stale_and_replayed_requests(deployment):
    cred, _ = deployment.register()
    req, _ = obu_create_auth_request(cred, 0, deployment.rng)
    sm_verify_auth_request(req, deployment.sm, deployment.view, 10, deployment.rng)
    with pytest.raises(ProtocolReject) as exc:
        sm_verify_auth_request(req, deployment.sm, deployment.view, 20, deployment.rng)
    assert exc.value.reason is Reason.REPLAY
    with pytest.raises(ProtocolReject) as exc:
        sm_verify_auth_request(req, deployment.sm, deployment.view, 300_001, deployment.rng)
    assert exc.value.reason is Reason.STALE


def test_replay_cache_not_filled_by_rejected_requests(deployment):
    cred, _ = deployment.register()
    req, _ = obu_create_auth_request(cred, 0, deployment.rng)
    bad = dataclasses.replace(req, auth=bytes(32))
    with pytest.raises(ProtocolReject):
        sm_verify_auth_request(bad, deployment.sm, deployment.view, 0, deployment.rng)
    sm_verify_auth_request(req, deployment.sm, deployment.view, 0, deployment.rng)


def test_freshness_window():
    assert is_fresh(100, 0, 100) and not is_fresh(101, 0, 100) and not is_fresh(0, 101, 100)
    assert is_fresh(10 ** 12, 0, None)


def test_response_checks(deployment):
    cred, _ = deployment.register()
    pk = deployment.sm.keypair.pk
    req, pending = obu_create_auth_request(cred, 0, deployment.rng)
    resp, *_ = sm_verify_auth_request(req, deployment.sm, deployment.view, 5, deployment.rng)

    tampered = dataclasses.replace(resp, r2=resp.r2 % (deployment.curve.n - 1) + 1)
    with pytest.raises(ProtocolReject) as exc:
        obu_verify_auth_response(tampered, pending, cred, pk, 10)
    assert exc.value.reason is Reason.BAD_AUTH
    # pending was consumed by the failed attempt
    with pytest.raises(ProtocolReject) as exc:
        obu_verify_auth_response(resp, pending, cred, pk, 10)
    assert exc.value.reason is Reason.CONSUMED

    _, p2 = obu_create_auth_request(cred, 0, deployment.rng)
    with pytest.raises(ProtocolReject) as exc:
        obu_verify_auth_response(resp, p2, cred, pk, 400_000)
    assert exc.value.reason is Reason.STALE


def test_consumed_pending_never_yields_second_key(deployment):
    cred, _ = deployment.register()
    req, pending = obu_create_auth_request(cred, 0, deployment.rng)
    resp, *_ = sm_verify_auth_request(req, deployment.sm, deployment.view, 1, deployment.rng)
    obu_verify_auth_response(resp, pending, cred, deployment.sm.keypair.pk, 2)
    with pytest.raises(ProtocolReject):
        obu_verify_auth_response(resp, pending, cred, deployment.sm.keypair.pk, 2)


def test_old_response_against_fresh_pending_rejected(deployment):
    cred, _ = deployment.register()
    pk = deployment.sm.keypair.pk
    req, _ = obu_create_auth_request(cred, 0, deployment.rng)
    old, *_ = sm_verify_auth_request(req, deployment.sm, deployment.view, 5, deployment.rng)
    _, fresh = obu_create_auth_request(cred, 1000, deployment.rng)
    with pytest.raises(ProtocolReject) as exc:
        obu_verify_auth_response(old, fresh, cred, pk, 1010)
    assert exc.value.reason is Reason.REPLAY
    # tolerated skew admits it: the hash alone does not bind the request
    _, fresh = obu_create_auth_request(cred, 1000, deployment.rng)
    obu_verify_auth_response(old, fresh, cred, pk, 1010, skew_tolerance_ms=995)


def test_wrong_sm_key_rejected(deployment):
    cred, _ = deployment.register()
    other = deployment.new_sm()
    req, pending = obu_create_auth_request(cred, 0, deployment.rng)
    resp, *_ = sm_verify_auth_request(req, deployment.sm, deployment.view, 1, deployment.rng)
    with pytest.raises(ProtocolReject) as exc:
        obu_verify_auth_response(resp, pending, cred, other.keypair.pk, 2)
    assert exc.value.reason is Reason.BAD_AUTH


def test_key_agreement_randomized_toy():
    dep = Deployment("toy-curve", seed=8)
    creds = [dep.register()[0] for _ in range(20)]
    rng = random.Random(3)
    for i in range(300):
        cred = creds[i % len(creds)]
        t = 1000 * i
        _, _, a, b, _ = handshake(dep, cred, t, t + rng.randrange(0, 50), t + 60, rng)
        assert a == b


# -- messages -------------------------------------------------------------------


def test_message_round_trips(deployment):
    cred, _ = deployment.register()
    c = deployment.curve
    req, pending = obu_create_auth_request(cred, 9, deployment.rng)
    resp, *_ = sm_verify_auth_request(req, deployment.sm, deployment.view, 9, deployment.rng)
    assert decode(c, req.to_bytes(c)) == req
    assert decode(c, resp.to_bytes(c)) == resp
    assert token_count(req.to_bytes(c)) == 4 and token_count(resp.to_bytes(c)) == 3
    with pytest.raises(MessageError):
        AuthResponse.from_bytes(c, req.to_bytes(c))
    with pytest.raises(MessageError):
        AuthRequest.from_bytes(c, frame(b"auth_request", b"x"))
    with pytest.raises(MessageError):
        decode(c, frame(b"nonsense"))
    with pytest.raises(MessageError):
        decode(c, b"\xff\xff")


# -- handoff -----------------------------------------------------------------


def committed_view(dep, *records):
    members = Membership(((b"w" * 16, b"k" * 32),))
    chain = Chain(members)
    block = Block.build(0, chain.head_hash, 0, records)
    sig = members.sign(b"w" * 16, b"P_req", 0, block.block_hash)
    chain.append(dataclasses.replace(block, proposer=b"w" * 16, proposer_sig=sig))
    return LedgerView(dep.ad.registry, chain)


def test_handoff_decisions(deployment):
    cred, _ = deployment.register()
    new_sm = deployment.new_sm()
    rec = AuthRecord(cred.l, cred.id, deployment.sm.id, 0, 1)
    ledger = committed_view(deployment, rec)
    revoked = RevocationList()

    ho = obu_create_handoff(cred, new_sm.keypair.pk, deployment.rng)
    assert pk_decrypt(new_sm.keypair.sk, ho.ciphertext) == cred.l
    assert sm_process_handoff(ho, new_sm, ledger, revoked).verdict is Verdict.GRANT

    empty = LedgerView(deployment.ad.registry)
    d = sm_process_handoff(ho, new_sm, empty, revoked)
    assert d.verdict is Verdict.REQUIRE_FULL_AUTH
    assert sm_process_handoff(ho, new_sm, empty, revoked, local_db={cred.l: rec}).verdict is Verdict.GRANT

    revoked.revoke(cred.l).revoke(cred.l)
    assert sm_process_handoff(ho, new_sm, ledger, revoked).verdict is Verdict.DENY
    # a revoked credential nobody has seen still needs a full auth, which the SM can then refuse
    assert sm_process_handoff(ho, new_sm, empty, revoked).verdict is Verdict.REQUIRE_FULL_AUTH


def test_handoff_tampered_or_misaddressed(deployment):
    cred, _ = deployment.register()
    new_sm = deployment.new_sm()
    ho = obu_create_handoff(cred, new_sm.keypair.pk, deployment.rng)
    tag = bytes([ho.ciphertext.tag[0] ^ 0x80]) + ho.ciphertext.tag[1:]
    bad = dataclasses.replace(ho, ciphertext=HybridCiphertext(ho.ciphertext.ephemeral_point,
                                                              ho.ciphertext.body, tag))
    view = committed_view(deployment, AuthRecord(cred.l, cred.id, deployment.sm.id, 0, 1))
    d = sm_process_handoff(bad, new_sm, view, RevocationList())
    assert d.verdict is Verdict.DENY and d.reason.startswith("malformed")
    d = sm_process_handoff(ho, deployment.sm, view, RevocationList())
    assert d.verdict is Verdict.DENY
    h2_ = obu_create_handoff(cred, new_sm.keypair.pk, deployment.rng)
    assert h2_.ciphertext.to_bytes() != ho.ciphertext.to_bytes()
    with pytest.raises(DecryptionError):
        pk_decrypt(deployment.sm.keypair.sk, ho.ciphertext)
