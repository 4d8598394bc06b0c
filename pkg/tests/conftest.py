import random

import pytest

from vfcauth.crypto import P256, TOY
from vfcauth.crypto.primitives import setup
from vfcauth.protocol import (
    AdState,
    Credential,
    SmState,
    ad_process_registration,
    new_identity,
    obu_begin_registration,
)
from vfcauth.ledger import LedgerView
from vfcauth.crypto.primitives import KeyPair


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(params=["production-curve", "toy-curve"])
def curve_id(request):
    return request.param


class Deployment:
    """AD, one SM and helpers for registering vehicles, without the simulator."""

    def __init__(self, curve_id="production-curve", seed=0, window_ms=300_000):
        self.rng = random.Random(seed)
        self.curve, ad_keys = setup(curve_id, seed)
        self.ad = AdState(self.curve, ad_keys, window_ms)
        self.window_ms = window_ms
        self.sm = self.new_sm()
        self.view = LedgerView(self.ad.registry)

    def register(self, id_=None, clock=0):
        id_ = id_ or new_identity(self.rng)
        req = obu_begin_registration(id_, clock, self.ad.keypair.pk, self.rng)
        resp, reg = ad_process_registration(req, self.ad, clock, self.rng)
        return Credential.from_response(id_, resp), reg

    def new_sm(self):
        cred, _ = self.register()
        return SmState(cred.id, cred.keypair, self.window_ms)


@pytest.fixture
def deployment():
    return Deployment()


@pytest.fixture
def toy_deployment():
    return Deployment("toy-curve")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
