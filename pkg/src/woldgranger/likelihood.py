"""Exact log-likelihood.

lambda_a is constant on each interval (t[a, i-1], t[a, i]], so the compensator
is a finite sum: the background part mu_a * T_a plus, for every interval, its
width times the Wold part of the intensity at the interval's right end.
"""

from __future__ import annotations

import math

import numpy as np

from .core import ModelParams, ProcessCollection

IMPOSSIBLE = float("-inf")


def _wold_rates(params: ModelParams, collection: ProcessCollection, a: int, anchors: np.ndarray) -> np.ndarray:
    """Sum over b of alpha_ba / (beta_b + Delta_ba) for each anchor event time of a."""
    out = np.zeros(anchors.size)
    if anchors.size == 0:
        return out
    for b, tb in enumerate(collection.processes):
        alpha = params.granger[b, a]
        if alpha == 0 or tb.size == 0:
            continue
        q = np.searchsorted(tb, anchors, side="left") - 1
        ok = q >= 0
        out[ok] += alpha / (params.beta[b] + (anchors[ok] - tb[q[ok]]))
    return out


def process_loglik(params: ModelParams, collection: ProcessCollection, a: int, censored: bool = False) -> float:
    """Log-likelihood of process a, integrating up to its last event.

    With ``censored=True`` the compensator also covers (T_a, horizon].
    Returns ``IMPOSSIBLE`` (minus infinity) when some event has zero intensity.
    """
    collection.check_params(params)
    collection.check_process(a)
    ta = collection.processes[a]
    mu = float(params.mu[a])
    if ta.size == 0:
        return -mu * collection.horizon if censored else 0.0

    # Wold part on (t[i-1], t[i]] is anchored at t[i-1]; nothing before the first event
    wold = np.zeros(ta.size)
    wold[1:] = _wold_rates(params, collection, a, ta[:-1])
    point = mu + wold
    if np.any(point <= 0):
        return IMPOSSIBLE
    widths = np.diff(ta, prepend=0.0)
    end = ta[-1]
    compensator = mu * end + math.fsum(widths * wold)
    if censored and collection.horizon > end:
        tail = _wold_rates(params, collection, a, ta[-1:])[0]
        compensator += (mu + tail) * (collection.horizon - end)
    return math.fsum(np.log(point)) - compensator


def total_loglik(params: ModelParams, collection: ProcessCollection, censored: bool = False) -> float:
    collection.check_params(params)
    parts = [process_loglik(params, collection, a, censored) for a in range(collection.K)]
    if any(p == IMPOSSIBLE for p in parts):
        return IMPOSSIBLE
    return math.fsum(parts)
