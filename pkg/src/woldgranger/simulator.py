"""Exact simulation of the multivariate Wold model on [0, T].

Between two consecutive events of the pooled process every rate is constant,
so the next event time is a single exponential draw at the summed rate and the
emitting process is a categorical draw proportional to the individual rates.
Only the emitting process changes its rate after an event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ContractError, ModelParams, ProcessCollection, ValidationError, build_collection


@dataclass(frozen=True)
class SimulationConfig:
    params: ModelParams
    horizon: float
    seed: int = 0
    max_events: int | None = None
    zero_wold: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ValidationError(f"horizon must be finite and positive, got {self.horizon!r}")
        if self.max_events is not None and self.max_events < 0:
            raise ValidationError("max_events must be nonnegative")


@dataclass(frozen=True, eq=False)
class SimulatedCollection(ProcessCollection):
    truncated: bool = False


def _unit_exponential(rng) -> float:
    return -math.log1p(-rng.random())


def simulate(config: SimulationConfig, rng=None) -> SimulatedCollection:
    """Draw one realization.

    ``rng`` defaults to a generator seeded from ``config.seed``; any object
    with a ``random()`` method returning floats in [0, 1) may be injected.
    """
    params = config.params
    k = params.K
    mu = np.asarray(params.mu, dtype=np.float64)
    if mu.sum() <= 0:
        raise ContractError("process cannot start: all background rates are zero")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(int(config.seed)))
    granger = np.asarray(params.granger, dtype=np.float64)
    beta = np.asarray(params.beta, dtype=np.float64)

    rates = mu.copy()
    last = np.full(k, -np.inf)
    events = [[] for _ in range(k)]
    t = 0.0
    count = 0
    truncated = False
    while True:
        total = rates.sum()
        t += _unit_exponential(rng) / total
        if t > config.horizon:
            break
        if config.max_events is not None and count >= config.max_events:
            truncated = True
            break
        u = rng.random() * total
        a = int(np.searchsorted(np.cumsum(rates), u, side="right"))
        a = min(a, k - 1)
        while rates[a] == 0 and a > 0:
            a -= 1
        events[a].append(t)
        count += 1
        if not config.zero_wold:
            # column a of Phi: increments measured from the new event to each
            # process's latest event (a's own previous event for b == a)
            seen = np.isfinite(last)
            wold = np.zeros(k)
            wold[seen] = granger[seen, a] / (beta[seen] + (t - last[seen]))
            rates[a] = mu[a] + wold.sum()
        last[a] = t

    horizon = config.horizon
    if truncated:
        horizon = max((ev[-1] for ev in events if ev), default=0.0)
    base = build_collection(events, horizon=horizon)
    return SimulatedCollection(base.processes, base.horizon, base.times, base.offsets, truncated)
