"""Hashes, key derivation, XOR tokens, key pairs and hybrid encryption."""

from __future__ import annotations

import hashlib
import random
import secrets
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from vfcauth.crypto import opcount
from vfcauth.crypto.ec import CurveId, CurveParams, Point, PointDecodeError, get_curve, scalar_mult
from vfcauth.crypto.encoding import FramingError, frame, unframe

DIGEST_SIZE = 32
TAG_SIZE = 16

_KDF_SALT = b"vfcauth.kdf.v1"
_SESSION_INFO = b"session-key"
_HYBRID_INFO = b"hybrid-encryption"
_ZERO_NONCE = bytes(12)


class CryptoError(Exception):
    pass


class DecryptionError(CryptoError):
    """Authenticated decryption failed: wrong key or modified ciphertext."""


def h1(msg: bytes) -> bytes:
    opcount.tick("h1")
    return hashlib.sha256(b"\x01" + msg).digest()


def h2(msg: bytes) -> bytes:
    opcount.tick("h2")
    return hashlib.sha256(b"\x02" + msg).digest()


def _hkdf(ikm: bytes, info: bytes) -> bytes:
    return HKDF(algorithm=hashes.SHA256(), length=32, salt=_KDF_SALT, info=info).derive(ikm)


def kdf(msg: bytes) -> bytes:
    """Derive a 32-byte session key (HKDF-SHA256 with a fixed salt and label)."""
    opcount.tick("kdf")
    return _hkdf(msg, _SESSION_INFO)


def xor32(a: bytes, b: bytes) -> bytes:
    if len(a) != DIGEST_SIZE or len(b) != DIGEST_SIZE:
        raise ValueError("xor32 operands must be 32 bytes")
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(DIGEST_SIZE, "big")


def encode_scalar(curve: CurveParams, k: int) -> bytes:
    return k.to_bytes(curve.scalar_bytes, "big")


def decode_scalar(curve: CurveParams, data: bytes) -> int:
    """Parse a fixed-width scalar and require it to lie in [1, n-1]."""
    if len(data) != curve.scalar_bytes:
        raise ValueError(f"expected {curve.scalar_bytes}-byte scalar")
    k = int.from_bytes(data, "big")
    if not 1 <= k < curve.n:
        raise ValueError("scalar out of range")
    return k


def random_scalar(curve: CurveParams, rng: random.Random | None = None) -> int:
    rng = rng or secrets.SystemRandom()
    return rng.randrange(1, curve.n)


@dataclass(frozen=True)
class KeyPair:
    sk: int
    pk: Point

    @classmethod
    def generate(cls, curve: CurveParams, rng: random.Random | None = None) -> KeyPair:
        sk = random_scalar(curve, rng)
        return cls(sk, scalar_mult(sk, curve.P))


def setup(curve_id: CurveId | str, rng_seed: int) -> tuple[CurveParams, KeyPair]:
    """Pick the curve and generate the audit department's key pair from ``rng_seed``."""
    curve = get_curve(curve_id)
    return curve, KeyPair.generate(curve, random.Random(rng_seed))


@dataclass(frozen=True)
class HybridCiphertext:
    ephemeral_point: Point
    body: bytes
    tag: bytes

    def to_bytes(self) -> bytes:
        return frame(self.ephemeral_point.to_bytes(), self.body, self.tag)

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> HybridCiphertext:
        try:
            point, body, tag = unframe(data, 3)
            eph = Point.from_bytes(curve, point)
        except (FramingError, PointDecodeError) as exc:
            raise DecryptionError(f"malformed ciphertext: {exc}") from exc
        if len(tag) != TAG_SIZE:
            raise DecryptionError("bad tag length")
        return cls(eph, body, tag)


def _hybrid_key(eph: Point, shared: Point) -> bytes:
    return _hkdf(frame(eph.to_bytes(), shared.to_bytes()), _HYBRID_INFO)


def pk_encrypt(pk: Point, plaintext: bytes, rng: random.Random | None = None) -> HybridCiphertext:
    curve = pk.curve
    e = random_scalar(curve, rng)
    eph = scalar_mult(e, curve.P)
    key = _hybrid_key(eph, scalar_mult(e, pk))
    sealed = AESGCM(key).encrypt(_ZERO_NONCE, plaintext, eph.to_bytes())
    return HybridCiphertext(eph, sealed[:-TAG_SIZE], sealed[-TAG_SIZE:])


def pk_decrypt(sk: int, ct: HybridCiphertext) -> bytes:
    eph = ct.ephemeral_point
    if eph.is_identity:
        raise DecryptionError("identity ephemeral point")
    key = _hybrid_key(eph, scalar_mult(sk, eph))
    try:
        return AESGCM(key).decrypt(_ZERO_NONCE, ct.body + ct.tag, eph.to_bytes())
    except InvalidTag as exc:
        raise DecryptionError("authentication tag mismatch") from exc
