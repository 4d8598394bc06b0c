"""Ordered, JSON-serialisable simulation log."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterator


class EventTrace:
    """Append-only list of ``{"t", "actor", "event", "outcome", ...}`` records."""

    def __init__(self, entries: list[dict[str, Any]] | None = None):
        self.entries: list[dict[str, Any]] = entries if entries is not None else []

    def log(self, t: int, actor: str, event: str, outcome: str = "ok", **details: Any) -> dict:
        entry = {"t": t, "actor": actor, "event": event, "outcome": outcome, **details}
        self.entries.append(entry)
        return entry

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[dict[str, Any]]:
        return iter(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventTrace):
            return NotImplemented
        return self.to_jsonl() == other.to_jsonl()

    def select(self, event: str | None = None, **match: Any) -> list[dict[str, Any]]:
        out = []
        for e in self.entries:
            if event is not None and e["event"] != event:
                continue
            if all(e.get(k) == v for k, v in match.items()):
                out.append(e)
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n" for e in self.entries)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def read(cls, path: str | Path) -> EventTrace:
        entries = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            if not line.strip():
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: not JSON: {exc}") from exc
        return cls(entries)
