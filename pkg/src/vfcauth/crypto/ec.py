"""Short-Weierstrass elliptic-curve groups over prime fields.

Two curves ship with the package: NIST P-256 for real runs and a 13-bit toy
curve whose whole group can be enumerated in tests.  Arithmetic uses Jacobian
coordinates internally; :class:`Point` values are always affine and immutable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

from vfcauth.crypto import opcount


class CurveId(str, enum.Enum):
    PRODUCTION = "production-curve"
    TOY = "toy-curve"


class PointDecodeError(ValueError):
    """Raised for byte strings that do not encode a point on the curve."""


@dataclass(frozen=True, eq=False)
class CurveParams:
    """y^2 = x^3 + a*x + b over GF(p) with base point ``(gx, gy)`` of prime order ``n``."""

    curve_id: CurveId
    p: int
    a: int
    b: int
    gx: int
    gy: int
    n: int
    _base_table: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def field_bytes(self) -> int:
        return (self.p.bit_length() + 7) // 8

    @property
    def scalar_bytes(self) -> int:
        return (self.n.bit_length() + 7) // 8

    @cached_property
    def P(self) -> Point:
        return Point(self, self.gx, self.gy)

    @cached_property
    def identity(self) -> Point:
        return Point(self, None, None)

    def contains(self, x: int, y: int) -> bool:
        p = self.p
        return 0 <= x < p and 0 <= y < p and (y * y - (x * x * x + self.a * x + self.b)) % p == 0

    def lift_x(self, x: int, odd: bool) -> Point:
        """Return the point with abscissa ``x`` and the requested y parity."""
        p = self.p
        if not 0 <= x < p:
            raise PointDecodeError("x coordinate out of range")
        rhs = (x * x * x + self.a * x + self.b) % p
        # both shipped fields have p = 3 (mod 4)
        y = pow(rhs, (p + 1) // 4, p)
        if y * y % p != rhs:
            raise PointDecodeError("x is not on the curve")
        if (y & 1) != odd:
            y = p - y
        if y == 0 and odd:
            raise PointDecodeError("no point with odd y")
        return Point(self, x, y)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CurveParams):
            return NotImplemented
        return (self.p, self.a, self.b, self.gx, self.gy, self.n) == (
            other.p, other.a, other.b, other.gx, other.gy, other.n)

    def __hash__(self) -> int:
        return hash((self.p, self.a, self.b, self.gx, self.gy, self.n))


@dataclass(frozen=True)
class Point:
    """An affine curve point; ``x is None`` marks the identity."""

    curve: CurveParams = field(repr=False)
    x: int | None
    y: int | None

    def __post_init__(self):
        if (self.x is None) != (self.y is None):
            raise ValueError("identity must have both coordinates unset")
        if self.x is not None and not self.curve.contains(self.x, self.y):
            raise ValueError("point is not on the curve")

    @property
    def is_identity(self) -> bool:
        return self.x is None

    def __add__(self, other: Point) -> Point:
        if not isinstance(other, Point):
            return NotImplemented
        return _to_affine(self.curve, _jadd(self.curve, _to_jac(self), _to_jac(other)))

    def __neg__(self) -> Point:
        if self.is_identity:
            return self
        return Point(self.curve, self.x, (-self.y) % self.curve.p)

    def __sub__(self, other: Point) -> Point:
        return self + (-other)

    def __rmul__(self, k: int) -> Point:
        if not isinstance(k, int):
            return NotImplemented
        return scalar_mult(k, self)

    def to_bytes(self) -> bytes:
        """Compressed SEC1-style encoding; the identity is ``0x00`` plus zero padding."""
        width = self.curve.field_bytes
        if self.is_identity:
            return b"\x00" * (1 + width)
        return bytes([2 | (self.y & 1)]) + self.x.to_bytes(width, "big")

    @classmethod
    def from_bytes(cls, curve: CurveParams, data: bytes) -> Point:
        width = curve.field_bytes
        if len(data) != 1 + width:
            raise PointDecodeError(f"expected {1 + width} bytes, got {len(data)}")
        tag = data[0]
        if tag == 0:
            if any(data[1:]):
                raise PointDecodeError("non-canonical identity encoding")
            return curve.identity
        if tag not in (2, 3):
            raise PointDecodeError(f"bad point tag {tag:#x}")
        return curve.lift_x(int.from_bytes(data[1:], "big"), odd=tag == 3)


# -- Jacobian arithmetic ---------------------------------------------------
# A Jacobian triple (X, Y, Z) stands for (X/Z^2, Y/Z^3); Z == 0 is the identity.

_INF = (1, 1, 0)


def _to_jac(pt: Point) -> tuple[int, int, int]:
    return _INF if pt.x is None else (pt.x, pt.y, 1)


def _to_affine(curve: CurveParams, jp: tuple[int, int, int]) -> Point:
    X, Y, Z = jp
    if Z == 0:
        return curve.identity
    p = curve.p
    zi = pow(Z, -1, p)
    zi2 = zi * zi % p
    return Point(curve, X * zi2 % p, Y * zi2 * zi % p)


def _jdouble(curve: CurveParams, jp):
    X, Y, Z = jp
    if Z == 0 or Y == 0:
        return _INF
    p = curve.p
    YY = Y * Y % p
    S = 4 * X * YY % p
    ZZ = Z * Z % p
    M = (3 * X * X + curve.a * ZZ * ZZ) % p
    X3 = (M * M - 2 * S) % p
    Y3 = (M * (S - X3) - 8 * YY * YY) % p
    Z3 = 2 * Y * Z % p
    return X3, Y3, Z3


def _jadd(curve: CurveParams, jp, jq):
    X1, Y1, Z1 = jp
    X2, Y2, Z2 = jq
    if Z1 == 0:
        return jq
    if Z2 == 0:
        return jp
    p = curve.p
    Z1Z1 = Z1 * Z1 % p
    Z2Z2 = Z2 * Z2 % p
    U1 = X1 * Z2Z2 % p
    U2 = X2 * Z1Z1 % p
    S1 = Y1 * Z2 * Z2Z2 % p
    S2 = Y2 * Z1 * Z1Z1 % p
    H = (U2 - U1) % p
    R = (S2 - S1) % p
    if H == 0:
        return _jdouble(curve, jp) if R == 0 else _INF
    HH = H * H % p
    HHH = H * HH % p
    V = U1 * HH % p
    X3 = (R * R - HHH - 2 * V) % p
    Y3 = (R * (V - X3) - S1 * HHH) % p
    Z3 = H * Z1 * Z2 % p
    return X3, Y3, Z3


def _jadd_affine(curve: CurveParams, jp, q):
    """Mixed addition of a Jacobian point and an affine ``(x, y)`` pair."""
    X1, Y1, Z1 = jp
    x2, y2 = q
    if Z1 == 0:
        return x2, y2, 1
    p = curve.p
    Z1Z1 = Z1 * Z1 % p
    U2 = x2 * Z1Z1 % p
    S2 = y2 * Z1 * Z1Z1 % p
    H = (U2 - X1) % p
    R = (S2 - Y1) % p
    if H == 0:
        return _jdouble(curve, jp) if R == 0 else _INF
    HH = H * H % p
    HHH = H * HH % p
    V = X1 * HH % p
    X3 = (R * R - HHH - 2 * V) % p
    Y3 = (R * (V - X3) - Y1 * HHH) % p
    Z3 = H * Z1 % p
    return X3, Y3, Z3


_WINDOW = 4


def _base_table(curve: CurveParams) -> list[list[tuple[int, int] | None]]:
    # table[i][d] = d * 16^i * P in affine form, so k*P needs no doublings
    table = curve._base_table.get("comb")
    if table is not None:
        return table
    rows = (curve.n.bit_length() + _WINDOW - 1) // _WINDOW
    table = []
    step = curve.P
    for _ in range(rows):
        row: list[tuple[int, int] | None] = [None]
        acc = _INF
        base = _to_jac(step)
        for _d in range(1, 1 << _WINDOW):
            acc = _jadd(curve, acc, base)
            a = _to_affine(curve, acc)
            row.append(None if a.is_identity else (a.x, a.y))
        table.append(row)
        nxt = base
        for _ in range(_WINDOW):
            nxt = _jdouble(curve, nxt)
        step = _to_affine(curve, nxt)
    curve._base_table["comb"] = table
    return table


def _mult_base(curve: CurveParams, k: int):
    acc = _INF
    mask = (1 << _WINDOW) - 1
    for row in _base_table(curve):
        d = k & mask
        if d and row[d] is not None:
            acc = _jadd_affine(curve, acc, row[d])
        k >>= _WINDOW
        if not k:
            break
    return acc


def _mult_var(curve: CurveParams, k: int, q: Point):
    # fixed 4-bit window, left to right
    jq = _to_jac(q)
    pre = [_INF, jq]
    for _ in range(2, 1 << _WINDOW):
        pre.append(_jadd(curve, pre[-1], jq))
    acc = _INF
    nbits = k.bit_length()
    top = ((nbits + _WINDOW - 1) // _WINDOW) * _WINDOW
    mask = (1 << _WINDOW) - 1
    for shift in range(top - _WINDOW, -1, -_WINDOW):
        for _ in range(_WINDOW):
            acc = _jdouble(curve, acc)
        d = (k >> shift) & mask
        if d:
            acc = _jadd(curve, acc, pre[d])
    return acc


def scalar_mult(k: int, q: Point) -> Point:
    """Return ``k * q``.  Scalars are reduced modulo the group order."""
    opcount.tick("scalar_mult")
    curve = q.curve
    k %= curve.n
    if k == 0 or q.is_identity:
        return curve.identity
    if q.x == curve.gx and q.y == curve.gy:
        return _to_affine(curve, _mult_base(curve, k))
    return _to_affine(curve, _mult_var(curve, k, q))


P256 = CurveParams(
    curve_id=CurveId.PRODUCTION,
    p=0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF,
    a=-3,
    b=0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B,
    gx=0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296,
    gy=0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5,
    n=0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551,
)

# y^2 = x^3 - 3x + 3 over GF(8191); 8221 points, a prime, so every
# non-identity point generates the whole group.
TOY = CurveParams(
    curve_id=CurveId.TOY,
    p=8191,
    a=-3,
    b=3,
    gx=1,
    gy=1,
    n=8221,
)

CURVES = {CurveId.PRODUCTION: P256, CurveId.TOY: TOY}


def get_curve(curve_id: CurveId | str) -> CurveParams:
    try:
        return CURVES[CurveId(curve_id)]
    except ValueError:
        raise ValueError(f"unsupported curve id: {curve_id!r}") from None
