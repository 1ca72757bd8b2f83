"""Domain types shared across the package.

Timelines are stored twice: as a tuple of per-process read-only arrays and as a
single CSR-style layout (``times`` plus ``offsets``) that the compiled kernels
consume directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ROW_SUM_TOL = 1e-9
DEDUP_SCALE = 1e-9


class WoldGrangerError(Exception):
    """Base class for all package errors."""


class ValidationError(WoldGrangerError, ValueError):
    """Input data or parameters violate a documented invariant."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class StructuralError(ValidationError):
    """Dimension mismatch or out-of-range process id."""


class ContractError(WoldGrangerError, ValueError):
    """A numerical precondition of an operation was not met."""


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def _readonly(arr):
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.flags.writeable = False
    return arr


def _check_dimensions(granger, beta, mu):
    if granger.ndim != 2 or granger.shape[0] != granger.shape[1]:
        raise StructuralError(f"granger must be square, got shape {granger.shape}")
    k = granger.shape[0]
    if k < 1:
        raise StructuralError("granger must have at least one row")
    if beta.shape != (k,):
        raise StructuralError(f"beta has shape {beta.shape}, expected ({k},)")
    if mu.shape != (k,):
        raise StructuralError(f"mu has shape {mu.shape}, expected ({k},)")
    return k


def validate_params(params) -> ValidationReport:
    """Check the Granger matrix, influence scales and background rates.

    ``params`` is either a :class:`ModelParams` or a ``(granger, beta, mu)``
    tuple; the tuple form lets callers audit values that would be rejected
    by the ``ModelParams`` constructor.
    """
    if isinstance(params, ModelParams):
        granger, beta, mu = params.granger, params.beta, params.mu
    else:
        granger, beta, mu = params
    granger = np.asarray(granger, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    k = _check_dimensions(granger, beta, mu)

    violations = []
    for b in range(k):
        row = granger[b]
        if not np.all(np.isfinite(row)):
            violations.append(f"row {b} has non-finite entries")
            continue
        negative = np.flatnonzero(row < 0)
        for a in negative:
            violations.append(f"granger[{b}, {a}] = {float(row[a])!r} < 0")
        total = math.fsum(row)
        if abs(total - 1.0) > ROW_SUM_TOL:
            violations.append(f"row {b} sums to {total!r}")
    for b, value in enumerate(beta):
        if not value >= 1:
            violations.append(f"beta[{b}] < 1")
        elif not math.isfinite(value):
            violations.append(f"beta[{b}] is not finite")
    for a, value in enumerate(mu):
        if not value >= 0:
            violations.append(f"mu[{a}] < 0")
        elif not math.isfinite(value):
            violations.append(f"mu[{a}] is not finite")
    return ValidationReport(tuple(violations))


@dataclass(frozen=True)
class ModelParams:
    """Granger matrix (rows: influencer b, columns: influenced a), beta and mu."""

    granger: np.ndarray
    beta: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "granger", _readonly(self.granger))
        object.__setattr__(self, "beta", _readonly(self.beta))
        object.__setattr__(self, "mu", _readonly(self.mu))
        report = validate_params((self.granger, self.beta, self.mu))
        if not report.ok:
            raise ValidationError("invalid model parameters: " + "; ".join(report.violations),
                                  report.violations)

    @property
    def K(self) -> int:
        return self.granger.shape[0]

    @classmethod
    def with_unit_beta(cls, granger, mu):
        granger = np.asarray(granger, dtype=np.float64)
        return cls(granger, np.ones(granger.shape[0]), mu)


@dataclass(frozen=True, eq=False)
class ProcessCollection:
    """K sorted event timelines observed on ``[0, horizon]``."""

    processes: tuple
    horizon: float
    times: np.ndarray = field(repr=False)
    offsets: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return len(self.processes)

    @property
    def total_events(self) -> int:
        return int(self.offsets[-1])

    def sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def check_process(self, *ids):
        for p in ids:
            if not (0 <= int(p) < self.K) or int(p) != p:
                raise StructuralError(f"process id {p} outside [0, {self.K})")

    def check_params(self, params: ModelParams):
        if params.K != self.K:
            raise StructuralError(f"model has K={params.K} but data has K={self.K}")

    def __len__(self):
        return self.K


def deduplicate(times: np.ndarray) -> np.ndarray:
    """Make a sorted timeline strictly increasing.

    The j-th repeat of a value t becomes t + j*eps with eps = 1e-9 times the
    mean inter-event time of the process; when that step is below the float
    resolution at t, the next representable double after the previous entry
    is used instead.
    """
    times = np.sort(np.asarray(times, dtype=np.float64))
    n = times.size
    if n < 2 or np.all(np.diff(times) > 0):
        return times
    span = times[-1] - times[0]
    if span > 0:
        mean_gap = span / (n - 1)
    elif times[-1] > 0:
        mean_gap = times[-1] / n
    else:
        mean_gap = 1.0
    eps = DEDUP_SCALE * mean_gap
    out = times.copy()
    j = 0
    for i in range(1, n):
        if times[i] == times[i - 1]:
            j += 1
            value = times[i] + j * eps
        else:
            j = 0
            value = times[i]
        if value <= out[i - 1]:
            value = np.nextafter(out[i - 1], np.inf)
        out[i] = value
    return out


def build_collection(event_lists: Sequence[Sequence[float]], horizon=None) -> ProcessCollection:
    """Sort, deduplicate and pack K event sequences into a ProcessCollection."""
    if len(event_lists) == 0:
        raise ValidationError("empty collection: at least one process is required")
    timelines = []
    raw_latest = 0.0
    for a, events in enumerate(event_lists):
        arr = np.asarray(events, dtype=np.float64).ravel()
        if arr.size:
            bad = arr[~np.isfinite(arr)]
            if bad.size:
                raise ValidationError(f"process {a}: non-finite timestamp {float(bad[0])!r}")
            negative = arr[arr < 0]
            if negative.size:
                raise ValidationError(f"process {a}: negative timestamp {float(negative[0])!r}")
            raw_latest = max(raw_latest, float(arr.max()))
        timelines.append(deduplicate(arr))

    latest = max((t[-1] for t in timelines if t.size), default=0.0)
    if horizon is None:
        horizon = latest
    horizon = float(horizon)
    if not math.isfinite(horizon) or horizon < raw_latest:
        raise ValidationError(f"horizon {horizon!r} is before the last event at {raw_latest!r}")
    # deduplication may nudge the last event a few ulps past an explicit horizon
    horizon = max(horizon, float(latest))

    sizes = np.array([t.size for t in timelines], dtype=np.int64)
    offsets = np.zeros(len(timelines) + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    times = np.concatenate(timelines) if offsets[-1] else np.zeros(0)
    times = _readonly(times)
    offsets.flags.writeable = False
    processes = tuple(times[offsets[a]:offsets[a + 1]] for a in range(len(timelines)))
    return ProcessCollection(processes, horizon, times, offsets)


@dataclass
class LatentState:
    """Cause labels (K means exogenous) aligned with ``collection.times``.

    ``counts[b, a]`` is the number of events of process a attributed to b and
    ``counts_b[b]`` its row sum.
    """

    labels: np.ndarray
    counts: np.ndarray
    counts_b: np.ndarray

    @classmethod
    def from_labels(cls, collection: ProcessCollection, labels) -> "LatentState":
        labels = np.array(labels, dtype=np.int64)
        k = collection.K
        if labels.shape != (collection.total_events,):
            raise StructuralError(f"expected {collection.total_events} labels, got {labels.shape}")
        if labels.size and (labels.min() < 0 or labels.max() > k):
            raise StructuralError(f"labels must lie in [0, {k}]")
        owner = np.repeat(np.arange(k), collection.sizes())
        endo = labels < k
        counts = np.zeros((k, k), dtype=np.int64)
        np.add.at(counts, (labels[endo], owner[endo]), 1)
        return cls(labels, counts, counts.sum(axis=1))

    @property
    def K(self) -> int:
        return self.counts.shape[0]

    def process_labels(self, collection: ProcessCollection, a: int) -> np.ndarray:
        return self.labels[collection.offsets[a]:collection.offsets[a + 1]]

    def exogenous_count(self) -> int:
        return int(np.count_nonzero(self.labels == self.K))

    def check_consistency(self, collection: ProcessCollection | None = None):
        """Raise ValidationError if the counts disagree with each other or the labels."""
        problems = []
        rows = self.counts.sum(axis=1)
        for b in np.flatnonzero(rows != self.counts_b):
            problems.append(f"row {b}: sum(n_ba) = {rows[b]} but n_b = {self.counts_b[b]}")
        if self.counts_b.sum() + self.exogenous_count() != self.labels.size:
            problems.append("endogenous plus exogenous labels do not cover every event")
        if collection is not None:
            fresh = LatentState.from_labels(collection, self.labels)
            if not np.array_equal(fresh.counts, self.counts):
                problems.append("n_ba does not match the labels")
        if problems:
            raise ValidationError("; ".join(problems), problems)

    def copy(self) -> "LatentState":
        return LatentState(self.labels.copy(), self.counts.copy(), self.counts_b.copy())


SAMPLER_MODES = ("exact_gibbs", "mh_fptree")


@dataclass(frozen=True)
class FitConfig:
    """Options for :func:`woldgranger.sampler.fit`.

    ``alpha_prior`` and ``mu_floor`` default to 1/K and 1/horizon once the
    data are known. ``average_last_half`` averages the Granger estimate over
    the second half of the iterations instead of using final counts.
    ``debug`` audits count consistency after every single resample.
    """

    iterations: int = 300
    alpha_prior: float | None = None
    sampler_mode: str = "mh_fptree"
    seed: int = 0
    workers: int = 1
    mu_floor: float | None = None
    average_last_half: bool = False
    debug: bool = False

    def __post_init__(self):
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValidationError(f"iterations must be a positive integer, got {self.iterations!r}")
        if self.alpha_prior is not None and not self.alpha_prior > 0:
            raise ValidationError(f"alpha_prior must be positive, got {self.alpha_prior!r}")
        if self.sampler_mode not in SAMPLER_MODES:
            raise ValidationError(f"sampler_mode must be one of {SAMPLER_MODES}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ValidationError(f"workers must be a positive integer, got {self.workers!r}")
        if self.mu_floor is not None and not self.mu_floor >= 0:
            raise ValidationError(f"mu_floor must be nonnegative, got {self.mu_floor!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")

    def resolved_alpha(self, k: int) -> float:
        return 1.0 / k if self.alpha_prior is None else float(self.alpha_prior)

    def resolved_floor(self, horizon: float) -> float:
        if self.mu_floor is not None:
            return float(self.mu_floor)
        return 1.0 / horizon if horizon > 0 else 0.0
