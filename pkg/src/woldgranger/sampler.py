"""MCMC-EM fitting of the Granger matrix from cause labels.

Every event carries a label: the process that excited it, or K for an
exogenous (background) arrival. The E-step resamples labels process by
process in time order, either with an exact collapsed Gibbs draw over all K
influencers or with a Metropolis-Hastings step whose proposal comes from an
F+Tree over the smoothed count ratios. The M-step refits each background rate
from the events currently labelled exogenous.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .core import (
    ContractError,
    FitConfig,
    LatentState,
    ModelParams,
    ProcessCollection,
    ValidationError,
)
from .fptree import FPTree, capacity_for, tree_sample, tree_update
from .timeline import DeltaResult, event_deltas

MODE_GIBBS = 0
MODE_MH = 1
_MODES = {"exact_gibbs": MODE_GIBBS, "mh_fptree": MODE_MH}

# status codes returned by the compiled sweep
_OK = 0
_BAD_ROW = 1
_BAD_COLUMN = 2


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True, nogil=True)
def _count_before(times, start, stop, x):
    lo = start
    hi = stop
    while lo < hi:
        mid = (lo + hi) >> 1
        if times[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo - start


@njit(cache=True, nogil=True)
def _wold_factor(times, offsets, b, anchor, beta_b):
    """1 / (beta_b + Delta) for an anchor event of a; 0 when b has no earlier event."""
    start = offsets[b]
    n = _count_before(times, start, offsets[b + 1], anchor)
    if n == 0:
        return 0.0
    return 1.0 / (beta_b + (anchor - times[start + n - 1]))


@njit(cache=True, nogil=True)
def _exogenous_probability(mu_a, t, t_mu):
    return -math.expm1(-mu_a * (t - t_mu))


@njit(cache=True, nogil=True)
def _leaf_weight(counts, counts_b, b, a, alpha_p, k):
    return (counts[b, a] + alpha_p) / (counts_b[b] + alpha_p * k)


@njit(cache=True, nogil=True)
def _load_tree(tree, counts, counts_b, a, alpha_p, k):
    cap = tree.size // 2
    tree[:] = 0.0
    for b in range(k):
        tree[cap + b] = _leaf_weight(counts, counts_b, b, a, alpha_p, k)
    for i in range(cap - 1, 0, -1):
        tree[i] = tree[2 * i] + tree[2 * i + 1]


@njit(cache=True, nogil=True)
def _exclude(labels, counts, counts_b, tree, use_tree, a, g, alpha_p, k):
    c = labels[g]
    if c < k:
        counts[c, a] -= 1
        counts_b[c] -= 1
        if use_tree:
            tree_update(tree, c, _leaf_weight(counts, counts_b, c, a, alpha_p, k))
    return c


@njit(cache=True, nogil=True)
def _include(labels, counts, counts_b, tree, use_tree, a, g, new, alpha_p, k):
    labels[g] = new
    if new < k:
        counts[new, a] += 1
        counts_b[new] += 1
        if use_tree:
            tree_update(tree, new, _leaf_weight(counts, counts_b, new, a, alpha_p, k))


@njit(cache=True, nogil=True)
def _mh_step(times, offsets, labels, counts, counts_b, tree, k, a, g, mu_a, t_mu,
             beta, alpha_p, u_exog, u_prop, u_accept, stats):
    """One Metropolis-Hastings update of label g (an event of process a).

    Returns the updated last-exogenous time of process a.
    """
    t = times[g]
    c = _exclude(labels, counts, counts_b, tree, True, a, g, alpha_p, k)
    if u_exog < _exogenous_probability(mu_a, t, t_mu):
        new = k
    elif g == offsets[a] or tree[1] <= 0.0:
        # first event of a: no increment exists, only the background explains it
        if tree[1] <= 0.0:
            stats[0] += 1
        new = k
    else:
        anchor = times[g - 1]
        b = tree_sample(tree, k, u_prop * tree[1])
        wb = _wold_factor(times, offsets, b, anchor, beta[b])
        wc = 0.0
        if c < k:
            wc = _wold_factor(times, offsets, c, anchor, beta[c])
        if wb == 0.0:
            new = c
        elif wc == 0.0:
            new = b
        elif u_accept * wc < wb:
            new = b
        else:
            new = c
        if new < k and new == c and wc == 0.0:
            new = k
    _include(labels, counts, counts_b, tree, True, a, g, new, alpha_p, k)
    if new == k:
        return t
    return t_mu


@njit(cache=True, nogil=True)
def _gibbs_step(times, offsets, labels, counts, counts_b, scratch, k, a, g, mu_a, t_mu,
                beta, alpha_p, u_exog, u_pick):
    t = times[g]
    _exclude(labels, counts, counts_b, scratch, False, a, g, alpha_p, k)
    new = k
    if u_exog >= _exogenous_probability(mu_a, t, t_mu) and g > offsets[a]:
        anchor = times[g - 1]
        total = 0.0
        for b in range(k):
            w = _wold_factor(times, offsets, b, anchor, beta[b])
            if w > 0.0:
                w *= _leaf_weight(counts, counts_b, b, a, alpha_p, k)
            scratch[b] = w
            total += w
        if total > 0.0:
            r = u_pick * total
            acc = 0.0
            new = -1
            last = -1
            for b in range(k):
                if scratch[b] > 0.0:
                    last = b
                    acc += scratch[b]
                    if r < acc:
                        new = b
                        break
            if new < 0:
                new = last
    _include(labels, counts, counts_b, scratch, False, a, g, new, alpha_p, k)
    if new == k:
        return t
    return t_mu


@njit(cache=True, nogil=True)
def _m_step(times, labels, start, stop, k, horizon, mu_floor):
    n = 0
    t0 = np.inf
    tf = -np.inf
    for g in range(start, stop):
        if labels[g] == k:
            n += 1
            t0 = min(t0, times[g])
            tf = max(tf, times[g])
    if n >= 2 and tf > t0:
        rate = n / (tf - t0)
    elif horizon > 0.0:
        rate = n / horizon
    else:
        rate = 0.0
    return max(rate, mu_floor)


@njit(cache=True, nogil=True)
def _audit(labels, counts, counts_b, offsets, a, k):
    for b in range(k):
        s = 0
        for x in range(k):
            s += counts[b, x]
        if s != counts_b[b]:
            return _BAD_ROW
    hist = np.zeros(k + 1, dtype=np.int64)
    for g in range(offsets[a], offsets[a + 1]):
        hist[labels[g]] += 1
    for b in range(k):
        if hist[b] != counts[b, a]:
            return _BAD_COLUMN
    return _OK


@njit(cache=True, nogil=True)
def _sweep(times, offsets, labels, counts, counts_b, beta, mu, alpha_p, mode, procs,
           uniforms, tree, horizon, mu_floor, debug, stats):
    """E-step plus M-step for each process id in ``procs``.

    stats[0]: empty-proposal fallbacks, stats[1]: changed labels,
    stats[2]: first failing audit code (0 if none).
    """
    k = counts.shape[0]
    scratch = np.zeros(k)
    for a in procs:
        start = offsets[a]
        stop = offsets[a + 1]
        if mode == 1:
            _load_tree(tree, counts, counts_b, a, alpha_p, k)
        t_mu = 0.0
        for g in range(start, stop):
            old = labels[g]
            if mode == 1:
                t_mu = _mh_step(times, offsets, labels, counts, counts_b, tree, k, a, g, mu[a],
                                t_mu, beta, alpha_p, uniforms[0, g], uniforms[1, g],
                                uniforms[2, g], stats)
            else:
                t_mu = _gibbs_step(times, offsets, labels, counts, counts_b, scratch, k, a, g,
                                   mu[a], t_mu, beta, alpha_p, uniforms[0, g], uniforms[1, g])
            if labels[g] != old:
                stats[1] += 1
            if debug:
                code = _audit(labels, counts, counts_b, offsets, a, k)
                if code != 0:
                    stats[2] = code
                    return
        mu[a] = _m_step(times, labels, start, stop, k, horizon, mu_floor)


# ---------------------------------------------------------------------------
# single-event operations


def exogenous_probability(mu_a: float, t: float, t_mu: float) -> float:
    """Probability that an event at t is background, given the last background event at t_mu."""
    if t < t_mu:
        raise ContractError(f"event time {t!r} precedes last exogenous time {t_mu!r}")
    if mu_a < 0:
        raise ContractError(f"negative rate {mu_a!r}")
    return float(-math.expm1(-mu_a * (t - t_mu)))


def superposition_probabilities(params: ModelParams, collection: ProcessCollection, a: int, i: int) -> np.ndarray:
    """Posterior over the cause of event i of process a.

    Index b < K is "caused by process b", index K is "exogenous"; each is that
    component's share of the total intensity at the event.
    """
    collection.check_params(params)
    collection.check_process(a)
    deltas = event_deltas(collection, a, i)
    present = ~np.isnan(deltas)
    terms = np.zeros(collection.K + 1)
    terms[:-1][present] = params.granger[present, a] / (params.beta[present] + deltas[present])
    terms[-1] = params.mu[a]
    total = math.fsum(terms)
    if total <= 0:
        raise ContractError(f"event {i} of process {a} is unexplainable: total intensity is zero")
    return terms / total


def target_weight(state: LatentState, alpha_p: float, b: int, a: int, delta: DeltaResult, beta_b: float) -> float:
    """Unnormalized collapsed conditional for "b caused this event of a".

    ``state`` must already exclude the event being resampled.
    """
    if delta.value is None:
        return 0.0
    k = state.K
    ratio = (state.counts[b, a] + alpha_p) / (state.counts_b[b] + alpha_p * k)
    return float(ratio / (beta_b + delta.value))


def mh_acceptance(w_candidate: float, w_current: float) -> float:
    """min(1, P(b)Q(c) / (P(c)Q(b))), which reduces to the ratio of Wold factors."""
    if w_candidate == 0:
        return 0.0
    if w_current == 0:
        return 1.0
    return min(1.0, w_candidate / w_current)


@dataclass
class SamplerScratch:
    """Per-worker sampling state for one process sweep."""

    collection: ProcessCollection
    alpha_p: float
    process: int
    tree: FPTree
    last_exogenous_time: np.ndarray
    stats: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=np.int64))

    @classmethod
    def for_process(cls, collection, state: LatentState, alpha_p: float, a: int, t_mu=None):
        k = collection.K
        tree = FPTree(np.ones(k))
        _load_tree(tree.tree, state.counts, state.counts_b, a, alpha_p, k)
        last = np.zeros(k) if t_mu is None else np.asarray(t_mu, dtype=np.float64).copy()
        return cls(collection, float(alpha_p), a, tree, last)

    def proposal_weights(self, state: LatentState) -> np.ndarray:
        k = state.K
        a = self.process
        return (state.counts[:, a] + self.alpha_p) / (state.counts_b + self.alpha_p * k)


def _event_index(collection, a, i):
    collection.check_process(a)
    n = collection.sizes()[a]
    if not 0 <= i < n:
        raise ValidationError(f"event index {i} outside [0, {n}) for process {a}")
    return int(collection.offsets[a] + i)


def gibbs_resample_label(params: ModelParams, state: LatentState, scratch: SamplerScratch, a: int, i: int, rng) -> int:
    """Two-stage exact draw: background with the exogenous probability, else collapsed Gibbs."""
    col = scratch.collection
    g = _event_index(col, a, i)
    u = rng.random(2)
    buf = np.zeros(col.K)
    scratch.last_exogenous_time[a] = _gibbs_step(
        col.times, col.offsets, state.labels, state.counts, state.counts_b, buf, col.K, a, g,
        float(params.mu[a]), float(scratch.last_exogenous_time[a]), params.beta, scratch.alpha_p,
        u[0], u[1])
    return int(state.labels[g])


def mh_resample_label(params: ModelParams, state: LatentState, scratch: SamplerScratch, a: int, i: int, rng) -> int:
    """Metropolis-Hastings update of one label with an F+Tree proposal."""
    col = scratch.collection
    if scratch.process != a:
        raise ContractError(f"scratch tree is loaded for process {scratch.process}, not {a}")
    g = _event_index(col, a, i)
    u = rng.random(3)
    scratch.last_exogenous_time[a] = _mh_step(
        col.times, col.offsets, state.labels, state.counts, state.counts_b, scratch.tree.tree,
        col.K, a, g, float(params.mu[a]), float(scratch.last_exogenous_time[a]), params.beta,
        scratch.alpha_p, u[0], u[1], u[2], scratch.stats)
    return int(state.labels[g])


def m_step(collection: ProcessCollection, state: LatentState, a: int, mu_floor: float) -> float:
    """Background rate of process a from its exogenous-labelled events."""
    collection.check_process(a)
    return float(_m_step(collection.times, state.labels, collection.offsets[a],
                         collection.offsets[a + 1], collection.K, collection.horizon,
                         float(mu_floor)))


def granger_from_counts(state: LatentState, alpha_p: float) -> np.ndarray:
    """Smoothed estimate (n_ba + alpha_p) / (n_b + alpha_p K); rows sum to one."""
    k = state.K
    counts = np.asarray(state.counts, dtype=np.float64)
    return (counts + alpha_p) / (np.asarray(state.counts_b, dtype=np.float64)[:, None] + alpha_p * k)


# ---------------------------------------------------------------------------
# fitting


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(key)))


def init_state(collection: ProcessCollection, seed: int) -> LatentState:
    """Labels drawn uniformly from {0, ..., K}."""
    labels = _rng(seed, 0).integers(0, collection.K + 1, size=collection.total_events)
    return LatentState.from_labels(collection, labels)


@dataclass
class FitResult:
    granger_estimate: np.ndarray
    mu_estimate: np.ndarray
    final_labels: LatentState
    trace: list
    config: FitConfig
    alpha_prior: float
    mu_floor: float

    @property
    def params(self) -> ModelParams:
        k = self.granger_estimate.shape[0]
        return ModelParams(self.granger_estimate, np.ones(k), self.mu_estimate)


class _Engine:
    def __init__(self, collection, config: FitConfig):
        self.col = collection
        self.config = config
        self.k = collection.K
        self.alpha_p = config.resolved_alpha(self.k)
        self.floor = config.resolved_floor(collection.horizon)
        self.mode = _MODES[config.sampler_mode]
        self.beta = np.ones(self.k)
        self.workers = min(config.workers, self.k)
        if config.debug and self.workers > 1:
            raise ValidationError("debug auditing requires workers = 1")
        self.groups = [np.arange(w, self.k, self.workers, dtype=np.int64) for w in range(self.workers)]
        cap = capacity_for(self.k)
        self.trees = [np.zeros(2 * cap) for _ in range(self.workers)]
        self.pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def run(self, state: LatentState, mu: np.ndarray, iteration: int):
        col = self.col
        uniforms = _rng(self.config.seed, 1, iteration).random((3, col.total_events))
        stats = [np.zeros(3, dtype=np.int64) for _ in range(self.workers)]
        if self.pool is None:
            _sweep(col.times, col.offsets, state.labels, state.counts, state.counts_b, self.beta,
                   mu, self.alpha_p, self.mode, self.groups[0], uniforms, self.trees[0],
                   col.horizon, self.floor, self.config.debug, stats[0])
        else:
            # sloppy counter: each worker sweeps against its own snapshot of n_b
            snapshot = state.counts_b.copy()
            local = [snapshot.copy() for _ in range(self.workers)]

            def work(w):
                _sweep(col.times, col.offsets, state.labels, state.counts, local[w], self.beta,
                       mu, self.alpha_p, self.mode, self.groups[w], uniforms, self.trees[w],
                       col.horizon, self.floor, False, stats[w])

            list(self.pool.map(work, range(self.workers)))
            merged = snapshot.copy()
            for replica in local:
                merged += replica - snapshot
            state.counts_b[:] = merged
        total = np.sum(stats, axis=0)
        if total[2]:
            what = "row sums of n_ba differ from n_b" if total[2] == _BAD_ROW else "n_ba differs from labels"
            raise ValidationError(f"count consistency violated in iteration {iteration}: {what}")
        return total

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def fit(collection: ProcessCollection, config: FitConfig | None = None) -> FitResult:
    """Run ``config.iterations`` EM iterations and return the estimated model."""
    config = config or FitConfig()
    if collection.total_events == 0:
        raise ValidationError("cannot fit a collection without events")
    engine = _Engine(collection, config)
    state = init_state(collection, config.seed)
    mu = np.array([
        _m_step(collection.times, state.labels, collection.offsets[a], collection.offsets[a + 1],
                engine.k, collection.horizon, engine.floor)
        for a in range(engine.k)
    ])
    n = collection.total_events
    trace = []
    averaged = np.zeros((engine.k, engine.k))
    n_averaged = 0
    try:
        for it in range(config.iterations):
            stats = engine.run(state, mu, it)
            trace.append({
                "iteration": it,
                "exogenous_fraction": state.exogenous_count() / n,
                "label_change_rate": int(stats[1]) / n,
                "empty_proposals": int(stats[0]),
            })
            if config.average_last_half and it >= config.iterations // 2:
                averaged += granger_from_counts(state, engine.alpha_p)
                n_averaged += 1
    finally:
        engine.close()
    if n_averaged:
        granger = averaged / n_averaged
        granger /= granger.sum(axis=1, keepdims=True)
    else:
        granger = granger_from_counts(state, engine.alpha_p)
    return FitResult(granger, mu.copy(), state, trace, config, engine.alpha_p, engine.floor)
