"""Binary search over timelines and the Wold increments between processes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ProcessCollection


@dataclass(frozen=True)
class DeltaResult:
    """Wold increment ``t[a, p] - t[b, q]`` and the indices that produced it.

    All three fields are None when either index is undefined.
    """

    value: float | None = None
    p_index: int | None = None
    q_index: int | None = None

    @property
    def present(self) -> bool:
        return self.value is not None


ABSENT = DeltaResult()


def prev_index(timeline, t: float):
    """Largest i with ``timeline[i] < t``, or None."""
    i = int(np.searchsorted(timeline, t, side="left")) - 1
    return i if i >= 0 else None


def delta_cross(collection: ProcessCollection, b: int, a: int, t: float) -> DeltaResult:
    """Delta_ba(t): gap between a's last event before t and b's last event before that.

    With ``b == a`` this is the self increment of process a.
    """
    collection.check_process(a, b)
    ta = collection.processes[a]
    p = prev_index(ta, t)
    if p is None:
        return ABSENT
    anchor = ta[p]
    q = prev_index(collection.processes[b], anchor)
    if q is None:
        return ABSENT
    return DeltaResult(float(anchor - collection.processes[b][q]), p, q)


def event_deltas(collection: ProcessCollection, a: int, i: int) -> np.ndarray:
    """Delta_ba at the i-th event of process a, for every b; NaN where absent."""
    out = np.full(collection.K, np.nan)
    if i == 0:
        return out
    anchor = collection.processes[a][i - 1]
    for b, tb in enumerate(collection.processes):
        q = int(np.searchsorted(tb, anchor, side="left")) - 1
        if q >= 0:
            out[b] = anchor - tb[q]
    return out
