"""Per-context counters for primitive invocations.

The simulator wraps each actor step in :func:`counting` so the trace can
report how many hashes and scalar multiplications a protocol step performed.
Outside a ``counting`` block the ticks are no-ops.
"""

from __future__ import annotations

import contextlib
import contextvars
from collections import Counter

_current: contextvars.ContextVar[Counter | None] = contextvars.ContextVar("opcount", default=None)


def tick(name: str) -> None:
    counter = _current.get()
    if counter is not None:
        counter[name] += 1


@contextlib.contextmanager
def counting():
    """Yield a :class:`collections.Counter` filled by primitives called inside the block."""
    counter: Counter = Counter()
    token = _current.set(counter)
    try:
        yield counter
    finally:
        _current.reset(token)
