"""Register one vehicle and one service manager, then run a single handshake by hand.

Each step prints what goes over the air so the message flow can be followed.

    python3 demos/handshake_walkthrough.py
"""

import random

from vfcauth.crypto import opcount
from vfcauth.crypto.primitives import setup
from vfcauth.ledger import LedgerView
from vfcauth.protocol import (
    AdState,
    Credential,
    SmState,
    ad_process_registration,
    new_identity,
    obu_begin_registration,
    obu_create_auth_request,
    obu_verify_auth_response,
    sm_verify_auth_request,
)

rng = random.Random(2024)
curve, ad_keys = setup("production-curve", 1)
ad = AdState(curve, ad_keys)


def register(clock):
    id_ = new_identity(rng)
    req = obu_begin_registration(id_, clock, ad.keypair.pk, rng)
    resp, _ = ad_process_registration(req, ad, clock, rng)
    return Credential.from_response(id_, resp)


sm_cred = register(0)
sm = SmState(sm_cred.id, sm_cred.keypair)
car = register(5)
print(f"registered vehicle {car.id.hex()} and SM {sm.id.hex()}; registry size {len(ad.registry)}")

with opcount.counting() as ops:
    req, pending = obu_create_auth_request(car, 1_000, rng)
    print(f"vehicle -> SM  AuthRequest  t={req.t}  id={req.id.hex()}")
    resp, sm_key, record = sm_verify_auth_request(req, sm, LedgerView(ad.registry), 1_012, rng)
    print(f"SM -> vehicle  AuthResponse t_sm={resp.t}  auth_sm={resp.auth.hex()[:16]}...")
    car_key = obu_verify_auth_response(resp, pending, car, sm.keypair.pk, 1_020)

print(f"session keys match: {car_key == sm_key}  ({car_key.hex()[:16]}...)")
print(f"operations: {dict(ops)}")
print(f"record for the witness ledger: obu={record.obu_id.hex()} t_obu={record.t_obu}")
