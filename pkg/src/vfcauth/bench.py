"""Closed-form overhead models and the check that simulated runs match them.

Per authentication the proposed scheme costs ``5*T_h + 6*T_ECC`` and sends 7
tokens; the baseline it is compared with costs ``5*T_h + (k+3)*T_ECC`` and
sends ``k+2`` tokens, where ``k`` is the number of service managers.  XOR,
concatenation and kdf are priced at zero.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from vfcauth.simnet.trace import EventTrace

T_HASH_MS = 0.596
T_ECC_MS = 1.473
CSV_HEADER = ("vary", "value", "scheme", "compute_ms", "tokens")


class Scheme(str, enum.Enum):
    PROPOSED = "proposed"
    BASELINE = "baseline"


class Vary(str, enum.Enum):
    VEHICLES = "vehicles"
    SMS = "SMs"


@dataclass(frozen=True)
class OpCounts:
    hashes: int
    scalar_mults: int
    tokens: int


@dataclass(frozen=True)
class CostModel:
    t_hash: float = T_HASH_MS
    t_ecc: float = T_ECC_MS
    scheme: Scheme = Scheme.PROPOSED
    k: int = 1

    def __post_init__(self):
        if self.t_hash <= 0 or self.t_ecc <= 0:
            raise ValueError("operation times must be positive")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    def with_(self, **changes) -> CostModel:
        return CostModel(**{**self.__dict__, **changes})

    def op_counts(self) -> OpCounts:
        if self.scheme is Scheme.PROPOSED:
            return OpCounts(5, 6, 7)
        return OpCounts(5, self.k + 3, self.k + 2)


def compute_cost_per_auth(model: CostModel) -> float:
    ops = model.op_counts()
    return ops.hashes * model.t_hash + ops.scalar_mults * model.t_ecc


def tokens_per_auth(scheme: Scheme | str, k: int = 1) -> int:
    if k < 1:
        raise ValueError("k must be >= 1")
    return CostModel(scheme=Scheme(scheme), k=k).op_counts().tokens


@dataclass(frozen=True)
class ReportRow:
    vary: str
    value: int
    scheme: str
    compute_ms: float
    tokens: int


@dataclass
class OverheadReport:
    rows: list[ReportRow] = field(default_factory=list)

    def column(self, scheme: Scheme | str) -> list[ReportRow]:
        scheme = Scheme(scheme).value
        return [r for r in self.rows if r.scheme == scheme]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow((r.vary, r.value, r.scheme, f"{r.compute_ms:.6f}", r.tokens))
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def sweep(model: CostModel, vary: Vary | str, values: Iterable[int], auths_per_vehicle: int = 1,
          vehicles: int = 1) -> OverheadReport:
    """Total cost of every auth for each point of ``values``, for both schemes.

    ``vary="vehicles"``: ``value`` vehicles each authenticate ``auths_per_vehicle``
    times, the baseline using ``model.k``.  ``vary="SMs"``: ``value`` is ``k`` and
    ``vehicles`` vehicles authenticate.
    """
    vary = Vary(vary)
    values = list(values)
    if not values:
        raise ValueError("empty sweep range")
    if auths_per_vehicle < 1 or vehicles < 1:
        raise ValueError("auths_per_vehicle and vehicles must be >= 1")
    rows = []
    for scheme in Scheme:
        for v in values:
            if v < 1:
                raise ValueError(f"sweep values must be >= 1, got {v}")
            if vary is Vary.VEHICLES:
                m, n_auths = model.with_(scheme=scheme), v * auths_per_vehicle
            else:
                m, n_auths = model.with_(scheme=scheme, k=v), vehicles * auths_per_vehicle
            rows.append(ReportRow(vary.value, v, scheme.value, n_auths * compute_cost_per_auth(m),
                                  n_auths * m.op_counts().tokens))
    return OverheadReport(rows)


# -- measured vs. model -----------------------------------------------------


@dataclass
class SessionCount:
    session: str
    hashes: int = 0
    scalar_mults: int = 0
    tokens: int = 0
    parts: set[str] = field(default_factory=set)
    failed: str | None = None


@dataclass
class ComparisonReport:
    expected: OpCounts
    successes: list[SessionCount] = field(default_factory=list)
    failed: list[SessionCount] = field(default_factory=list)
    adversarial: list[dict] = field(default_factory=list)
    divergent: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.divergent

    def totals(self) -> OpCounts:
        return OpCounts(sum(s.hashes for s in self.successes),
                        sum(s.scalar_mults for s in self.successes),
                        sum(s.tokens for s in self.successes))


_PARTS = {"auth_request": "request", "auth_verify": "verify", "auth_complete": "complete"}


def measured_vs_model(trace: EventTrace, model: CostModel | None = None) -> ComparisonReport:
    """Tally the operations and tokens each successful session actually used.

    A session counts as successful when the OBU request, the SM acceptance and
    the OBU acceptance are all in the trace.  Events caused by adversarial
    traffic are listed apart and never mixed into the per-session counts.
    """
    model = model or CostModel()
    report = ComparisonReport(model.op_counts())
    sessions: dict[str, SessionCount] = {}
    for e in trace:
        part = _PARTS.get(e["event"])
        if part is None or "session" not in e:
            continue
        if e.get("adversarial"):
            report.adversarial.append(e)
            continue
        s = sessions.setdefault(e["session"], SessionCount(e["session"]))
        if e["outcome"] not in ("ok", "accept"):
            s.failed = s.failed or f"{e['event']}: {e.get('reason', e['outcome'])}"
        ops = e.get("ops", {})
        s.hashes += ops.get("hash", 0)
        s.scalar_mults += ops.get("scalar_mult", 0)
        # tokens on the air, counted once at the vehicle: request out + response in
        if part == "request":
            s.tokens += e.get("tokens_out", 0)
        elif part == "complete":
            s.tokens += e.get("tokens_in", 0)
        s.parts.add(part)
    for s in sessions.values():
        if s.failed or s.parts != set(_PARTS.values()):
            s.failed = s.failed or "incomplete"
            report.failed.append(s)
            continue
        report.successes.append(s)
        got = OpCounts(s.hashes, s.scalar_mults, s.tokens)
        if got != report.expected:
            report.divergent.append(f"session {s.session}: measured {got}, model {report.expected}")
    return report
