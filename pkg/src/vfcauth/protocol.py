"""Registration, mutual authentication with key exchange, and region handoff.

The functions here are the per-role steps of the protocol.  Each one takes
the acting party's state explicitly and either returns the next message or
raises :class:`ProtocolReject`.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

from vfcauth.crypto.ec import CurveParams, Point, scalar_mult
from vfcauth.crypto.encoding import FramingError, decode_uint, encode_uint, frame, unframe
from vfcauth.crypto.primitives import (
    DecryptionError,
    KeyPair,
    encode_scalar,
    h1,
    h2,
    kdf,
    pk_decrypt,
    pk_encrypt,
    random_scalar,
    xor32,
)
from vfcauth.ledger import (
    AuthRecord,
    LedgerRegistration,
    LedgerView,
    RegistrationTable,
    RevocationList,
    lookup_credential,
)
from vfcauth.messages import (
    ID_SIZE,
    AuthRequest,
    AuthResponse,
    HandoffRequest,
    RegistrationRequest,
    RegistrationResponse,
)

DEFAULT_WINDOW_MS = 300_000


class Reason(str, enum.Enum):
    STALE = "stale"
    DUPLICATE_ID = "duplicate-id"
    MALFORMED = "malformed"
    UNREGISTERED = "unregistered"
    BAD_AUTH = "bad-auth"
    REPLAY = "replay"
    CONSUMED = "consumed"


class ProtocolReject(Exception):
    def __init__(self, reason: Reason, detail: str = ""):
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)
        self.reason = reason


def is_fresh(clock: int, t: int, window_ms: int | None) -> bool:
    """``window_ms=None`` disables the check (used only for negative-control runs)."""
    return window_ms is None or abs(clock - t) <= window_ms


def _check_fresh(clock: int, t: int, window_ms: int | None) -> None:
    if not is_fresh(clock, t, window_ms):
        raise ProtocolReject(Reason.STALE, f"|{clock} - {t}| > {window_ms}")


def _sk_id_hash(curve: CurveParams, sk: int, id_: bytes) -> bytes:
    return h1(frame(encode_scalar(curve, sk), id_))


# -- state ------------------------------------------------------------------


@dataclass
class AdState:
    curve: CurveParams
    keypair: KeyPair
    window_ms: int | None = DEFAULT_WINDOW_MS
    registry: RegistrationTable = field(default_factory=RegistrationTable)


@dataclass(frozen=True)
class Credential:
    id: bytes
    keypair: KeyPair
    m: bytes
    l: bytes

    @classmethod
    def from_response(cls, id_: bytes, resp: RegistrationResponse) -> Credential:
        curve = resp.pk.curve
        l = xor32(_sk_id_hash(curve, resp.sk, id_), resp.m)
        return cls(id_, KeyPair(resp.sk, resp.pk), resp.m, l)

    @property
    def curve(self) -> CurveParams:
        return self.keypair.pk.curve


@dataclass
class PendingAuth:
    r1: int
    t_obu: int
    tk: bytes
    consumed: bool = False


class ReplayCache:
    """Remembers ``(id, t)`` pairs accepted within the freshness window."""

    def __init__(self, window_ms: int | None):
        self.window_ms = window_ms
        self._seen: dict[tuple[bytes, int], int] = {}

    def __contains__(self, key: tuple[bytes, int]) -> bool:
        return key in self._seen

    def __len__(self) -> int:
        return len(self._seen)

    def add(self, key: tuple[bytes, int], clock: int) -> None:
        self._seen[key] = clock
        if self.window_ms is not None and len(self._seen) > 256:
            self.expire(clock)

    def expire(self, clock: int) -> None:
        # entries older than the window would fail the freshness check anyway
        w = self.window_ms
        self._seen = {k: v for k, v in self._seen.items() if abs(clock - k[1]) <= w}


@dataclass
class SmState:
    id: bytes
    keypair: KeyPair
    window_ms: int | None = DEFAULT_WINDOW_MS
    replay_cache_enabled: bool = True
    local_db: dict[bytes, AuthRecord] = field(default_factory=dict)
    replay: ReplayCache = field(init=False)

    def __post_init__(self):
        self.replay = ReplayCache(self.window_ms)

    @property
    def curve(self) -> CurveParams:
        return self.keypair.pk.curve


# -- Phase II: registration -------------------------------------------------


def obu_begin_registration(id_: bytes, clock: int, ad_pk: Point,
                           rng: random.Random | None = None) -> RegistrationRequest:
    if not id_:
        raise ValueError("identity must be nonempty")
    tk0 = frame(id_, encode_uint(clock))
    return RegistrationRequest(pk_encrypt(ad_pk, tk0, rng), clock)


def ad_process_registration(req: RegistrationRequest, ad: AdState, clock: int,
                            rng: random.Random | None = None
                            ) -> tuple[RegistrationResponse, LedgerRegistration]:
    """Validate a registration and issue a key pair plus the ledger token ``l``.

    Raises ProtocolReject with MALFORMED, STALE or DUPLICATE_ID.  On success the
    identity is recorded in ``ad.registry``.
    """
    try:
        id_, t = unframe(pk_decrypt(ad.keypair.sk, req.ciphertext), 2)
        t = decode_uint(t)
    except (DecryptionError, FramingError) as exc:
        raise ProtocolReject(Reason.MALFORMED, str(exc)) from exc
    if t != req.t_plain:
        raise ProtocolReject(Reason.MALFORMED, "outer timestamp differs from sealed one")
    if not id_:
        raise ProtocolReject(Reason.MALFORMED, "empty identity")
    _check_fresh(clock, t, ad.window_ms)
    if id_ in ad.registry:
        raise ProtocolReject(Reason.DUPLICATE_ID, "choose a new identity")

    curve = ad.curve
    kp = KeyPair.generate(curve, rng)
    m = h2(frame(encode_scalar(curve, ad.keypair.sk), id_))
    l = xor32(_sk_id_hash(curve, kp.sk, id_), m)
    record = LedgerRegistration(id_, kp.pk, l, clock)
    ad.registry.add(record)
    return RegistrationResponse(kp.pk, kp.sk, m), record


# -- Phase III: mutual authentication and key exchange ----------------------


def obu_create_auth_request(cred: Credential, clock: int,
                            rng: random.Random | None = None) -> tuple[AuthRequest, PendingAuth]:
    curve = cred.curve
    r1 = random_scalar(curve, rng)
    R1 = scalar_mult(r1, curve.P)
    R2 = scalar_mult(cred.keypair.sk, R1)
    tk = xor32(_sk_id_hash(curve, cred.keypair.sk, cred.id), cred.m)
    auth = h1(frame(R2.to_bytes(), cred.id, encode_uint(clock), tk))
    return AuthRequest(auth, r1, clock, cred.id), PendingAuth(r1, clock, tk)


def session_key(id_: bytes, token: bytes, t_obu: int, t_sm: int) -> bytes:
    return kdf(frame(id_, token, encode_uint(t_obu), encode_uint(t_sm)))


def sm_verify_auth_request(req: AuthRequest, sm: SmState, ledger_view: LedgerView, clock: int,
                           rng: random.Random | None = None
                           ) -> tuple[AuthResponse, bytes, AuthRecord]:
    """Check an OBU's request; on success answer it and derive the session key.

    The returned AuthRecord is also stored in ``sm.local_db``.
    """
    _check_fresh(clock, req.t, sm.window_ms)
    key = (req.id, req.t)
    if sm.replay_cache_enabled and key in sm.replay:
        raise ProtocolReject(Reason.REPLAY, "(id, t) already accepted")
    reg = lookup_credential(ledger_view, id=req.id)
    if reg is None:
        raise ProtocolReject(Reason.UNREGISTERED)

    curve = sm.curve
    expected = h1(frame(scalar_mult(req.r1, reg.pk).to_bytes(), req.id, encode_uint(req.t), reg.l))
    if expected != req.auth:
        raise ProtocolReject(Reason.BAD_AUTH, "Auth_OBU mismatch")
    if sm.replay_cache_enabled:
        sm.replay.add(key, clock)

    r2 = random_scalar(curve, rng)
    R3 = scalar_mult(r2, curve.P)
    R4 = scalar_mult(sm.keypair.sk, R3)
    t_sm = clock
    auth_sm = h1(frame(R4.to_bytes(), encode_uint(t_sm), reg.l))
    sk_ij = session_key(req.id, reg.l, req.t, t_sm)
    record = AuthRecord(reg.l, req.id, sm.id, req.t, t_sm)
    sm.local_db[reg.l] = record
    return AuthResponse(t_sm, r2, auth_sm), sk_ij, record


def obu_verify_auth_response(resp: AuthResponse, pending: PendingAuth, cred: Credential,
                             sm_pk: Point, clock: int,
                             window_ms: int | None = DEFAULT_WINDOW_MS,
                             skew_tolerance_ms: int = 0) -> bytes:
    """Authenticate the SM and return the session key.  ``pending`` is consumed either way.

    Auth_SM does not cover the request, so an old response for the same
    credential would verify against a new request.  A response stamped before
    the request it answers (beyond the known clock skew) is refused for that reason.
    """
    if pending.consumed:
        raise ProtocolReject(Reason.CONSUMED, "pending authentication already used")
    pending.consumed = True
    _check_fresh(clock, resp.t, window_ms)
    if window_ms is not None and resp.t + skew_tolerance_ms < pending.t_obu:
        raise ProtocolReject(Reason.REPLAY, "response predates the request")
    # the OBU cannot know SK_SM, but r2*PK_SM == SK_SM*(r2*P) == R4
    R4 = scalar_mult(resp.r2, sm_pk)
    expected = h1(frame(R4.to_bytes(), encode_uint(resp.t), pending.tk))
    if expected != resp.auth:
        raise ProtocolReject(Reason.BAD_AUTH, "Auth_SM mismatch")
    return session_key(cred.id, pending.tk, pending.t_obu, resp.t)


# -- Phase V: region handoff ------------------------------------------------


class Verdict(str, enum.Enum):
    GRANT = "grant"
    REQUIRE_FULL_AUTH = "require-full-auth"
    DENY = "deny"


@dataclass(frozen=True)
class HandoffDecision:
    verdict: Verdict
    reason: str = ""
    l: bytes | None = None


def obu_create_handoff(cred: Credential, new_sm_pk: Point,
                       rng: random.Random | None = None) -> HandoffRequest:
    return HandoffRequest(pk_encrypt(new_sm_pk, cred.l, rng))


def sm_process_handoff(req: HandoffRequest, sm: SmState, public_ledger: LedgerView,
                       revocation_list: RevocationList,
                       local_db: dict[bytes, AuthRecord] | None = None) -> HandoffDecision:
    """Decide whether a vehicle arriving from another region can skip re-authentication.

    Lookup order is the SM's local database, then the committed public ledger.
    """
    if local_db is None:
        local_db = sm.local_db
    try:
        l = pk_decrypt(sm.keypair.sk, req.ciphertext)
    except DecryptionError as exc:
        return HandoffDecision(Verdict.DENY, f"malformed: {exc}")
    if len(l) != 32:
        return HandoffDecision(Verdict.DENY, "malformed: token is not 32 bytes")
    found = l in local_db or lookup_credential(public_ledger, l=l) is not None
    if not found:
        return HandoffDecision(Verdict.REQUIRE_FULL_AUTH, "no prior authentication", l)
    if revocation_list.is_revoked(l):
        return HandoffDecision(Verdict.DENY, "revoked", l)
    return HandoffDecision(Verdict.GRANT, "", l)


def new_identity(rng: random.Random) -> bytes:
    return rng.getrandbits(8 * ID_SIZE).to_bytes(ID_SIZE, "big")
