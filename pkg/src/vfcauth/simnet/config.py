"""Scenario configuration: a YAML (or JSON) mapping validated into :class:`ScenarioConfig`."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from vfcauth.consensus import DEFAULT_INTERVAL_MS, DEFAULT_ROUNDS_PER_SPEAKER
from vfcauth.crypto.ec import CurveId
from vfcauth.protocol import DEFAULT_WINDOW_MS

ACTOR_CLASSES = ("obu", "sm", "ad", "wp")
FAULT_KINDS = ("crash", "byzantine")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Move:
    obu: int
    region: int
    at: int


@dataclass(frozen=True)
class TimedObu:
    obu: int
    at: int


@dataclass(frozen=True)
class WpFault:
    region: int
    kind: str
    start: int = 0
    until: int | None = None

    def active(self, t: int) -> bool:
        return self.start <= t and (self.until is None or t < self.until)


@dataclass(frozen=True)
class ScenarioConfig:
    regions: int = 2
    obus: int = 3
    seed: int = 0
    window_ms: int | None = DEFAULT_WINDOW_MS
    replay_cache: bool = True
    consensus_interval_ms: int = DEFAULT_INTERVAL_MS
    rounds_per_speaker: int = DEFAULT_ROUNDS_PER_SPEAKER
    latency_base_ms: int = 5
    latency_jitter_ms: int = 2
    clock_skew_ms: dict[str, int] = field(default_factory=dict)
    curve: CurveId = CurveId.PRODUCTION
    rsus_per_region: int = 1
    register_at: int = 0
    register_spacing_ms: int = 0
    auto_auth: bool = True
    moves: tuple[Move, ...] = ()
    reauths: tuple[TimedObu, ...] = ()
    revocations: tuple[TimedObu, ...] = ()
    wp_faults: tuple[WpFault, ...] = ()
    adversary: tuple[dict, ...] = ()
    adversary_script: str | None = None

    def __post_init__(self):
        problems = []
        if self.regions < 1:
            problems.append("regions must be >= 1")
        if self.obus < 1:
            problems.append("obus must be >= 1")
        if self.window_ms is not None and self.window_ms < 0:
            problems.append("window_ms must be >= 0 (or null to disable)")
        if self.consensus_interval_ms < 1:
            problems.append("consensus_interval_ms must be >= 1")
        if self.rounds_per_speaker < 1:
            problems.append("rounds_per_speaker must be >= 1")
        if self.latency_base_ms < 0 or self.latency_jitter_ms < 0:
            problems.append("latency values must be >= 0")
        if self.latency_jitter_ms > self.latency_base_ms:
            problems.append("latency_jitter_ms must not exceed latency_base_ms")
        if self.rsus_per_region < 1:
            problems.append("rsus_per_region must be >= 1")
        for k, v in self.clock_skew_ms.items():
            if k not in ACTOR_CLASSES:
                problems.append(f"clock_skew_ms: unknown actor class {k!r}")
            elif not isinstance(v, int) or v < 0:
                # timestamps are unsigned; skew one class ahead instead of another behind
                problems.append(f"clock_skew_ms.{k} must be a non-negative integer")
        for mv in self.moves:
            if not 0 <= mv.obu < self.obus or not 0 <= mv.region < self.regions:
                problems.append(f"move references unknown obu/region: {mv}")
        for ev in (*self.reauths, *self.revocations):
            if not 0 <= ev.obu < self.obus:
                problems.append(f"unknown obu index {ev.obu}")
        for f in self.wp_faults:
            if not 0 <= f.region < self.regions:
                problems.append(f"wp fault references unknown region {f.region}")
            if f.kind not in FAULT_KINDS:
                problems.append(f"wp fault kind must be one of {FAULT_KINDS}")
        if problems:
            raise ConfigError("; ".join(problems))

    def skew(self, actor_class: str) -> int:
        return self.clock_skew_ms.get(actor_class, 0)

    @classmethod
    def from_dict(cls, raw: dict[str, Any], base_dir: Path | None = None) -> ScenarioConfig:
        if not isinstance(raw, dict):
            raise ConfigError("scenario config must be a mapping")
        raw = dict(raw)
        known = {f.name for f in fields(cls)} | {"latency"}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            latency = raw.pop("latency", None) or {}
            if latency:
                raw.setdefault("latency_base_ms", latency.get("base_ms", 5))
                raw.setdefault("latency_jitter_ms", latency.get("jitter_ms", 2))
            window = raw.get("window_ms", DEFAULT_WINDOW_MS)
            if window is None or (isinstance(window, str) and window.lower() in ("inf", "none", "off")) \
                    or (isinstance(window, float) and math.isinf(window)):
                raw["window_ms"] = None
            if "curve" in raw:
                raw["curve"] = CurveId(raw["curve"])
            raw["moves"] = tuple(Move(**m) for m in raw.get("moves") or ())
            raw["reauths"] = tuple(TimedObu(**m) for m in raw.get("reauths") or ())
            raw["revocations"] = tuple(TimedObu(**m) for m in raw.get("revocations") or ())
            raw["wp_faults"] = tuple(
                WpFault(region=f["region"], kind=f["kind"], start=f.get("from", 0), until=f.get("until"))
                for f in raw.get("wp_faults") or ())
            raw["adversary"] = tuple(raw.get("adversary") or ())
            raw["clock_skew_ms"] = dict(raw.get("clock_skew_ms") or {})
            script = raw.get("adversary_script")
            if script and base_dir is not None and not Path(script).is_absolute():
                raw["adversary_script"] = str(base_dir / script)
            for key in ("regions", "obus", "seed", "consensus_interval_ms", "rounds_per_speaker",
                        "latency_base_ms", "latency_jitter_ms", "rsus_per_region", "register_at",
                        "register_spacing_ms"):
                v = raw.get(key)
                if v is not None and (not isinstance(v, int) or isinstance(v, bool)):
                    raise ConfigError(f"{key} must be an integer")
            return cls(**raw)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid scenario config: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> ScenarioConfig:
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: cannot parse: {exc}") from exc
        return cls.from_dict(raw or {}, base_dir=path.parent)
