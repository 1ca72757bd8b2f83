"""Scoring recovered Granger matrices against an interaction ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import ContractError, ProcessCollection, StructuralError

UNDEFINED = float("nan")


@dataclass(frozen=True)
class GroundTruthGraph:
    """Row b holds the fraction of b's messages that went to each destination."""

    matrix: np.ndarray
    id_map: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.matrix.shape[0]


def ground_truth_matrix(triples, id_map) -> GroundTruthGraph:
    """Empirical frequencies #(b -> a) / #(b is a source) over nodes in ``id_map``.

    Triples touching nodes outside ``id_map`` are ignored.
    """
    k = len(id_map)
    counts = np.zeros((k, k))
    for rec in triples:
        src, dst = rec[0], rec[1]
        if src in id_map and dst in id_map:
            counts[id_map[src], id_map[dst]] += 1
    totals = counts.sum(axis=1, keepdims=True)
    matrix = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    return GroundTruthGraph(matrix, dict(id_map))


def _truth_array(truth):
    return truth.matrix if isinstance(truth, GroundTruthGraph) else np.asarray(truth, dtype=float)


def _aligned(estimate, truth):
    est = np.asarray(estimate, dtype=float)
    tru = _truth_array(truth)
    if est.shape != tru.shape or est.ndim != 2 or est.shape[0] != est.shape[1]:
        raise StructuralError(f"estimate {est.shape} and truth {tru.shape} are not aligned K x K")
    return est, tru


def _top_hits(estimate, truth, n, exclude_diagonal, skip_uniform_rows):
    """Number of true edges among each row's top-n columns (-1 for skipped rows)."""
    est, tru = _aligned(estimate, truth)
    k = est.shape[0]
    available = k - 1 if exclude_diagonal else k
    if not 1 <= n <= available:
        raise ContractError(f"n = {n} outside [1, {available}]")
    hits = np.full(k, -1, dtype=np.int64)
    for b in range(k):
        row = est[b]
        if skip_uniform_rows and np.all(row == row[0]):
            continue
        cols = np.arange(k)
        if exclude_diagonal:
            cols = cols[cols != b]
        order = cols[np.lexsort((cols, -row[cols]))]
        top = order[:n]
        hits[b] = np.count_nonzero(tru[b, top] > 0)
    return hits


def precision_per_row(estimate, truth, n: int, exclude_diagonal: bool = False,
                      skip_uniform_rows: bool = False) -> np.ndarray:
    """Fraction of each row's top-n columns that are edges in the truth.

    Ties are broken by ascending column index. Skipped rows are NaN.
    """
    hits = _top_hits(estimate, truth, n, exclude_diagonal, skip_uniform_rows)
    return np.where(hits >= 0, hits / n, np.nan)


def precision_at_n(estimate, truth, n: int, exclude_diagonal: bool = False,
                   skip_uniform_rows: bool = False) -> float:
    # one division of integer totals keeps values such as 2/5 exact
    hits = _top_hits(estimate, truth, n, exclude_diagonal, skip_uniform_rows)
    scored = hits[hits >= 0]
    return int(scored.sum()) / (n * scored.size) if scored.size else UNDEFINED


def kendall_per_row(estimate, truth) -> np.ndarray:
    est, tru = _aligned(estimate, truth)
    out = np.full(est.shape[0], np.nan)
    for b in range(est.shape[0]):
        if np.ptp(est[b]) == 0 or np.ptp(tru[b]) == 0:
            continue
        out[b] = stats.kendalltau(est[b], tru[b], variant="b").statistic
    return out


def kendall_avg(estimate, truth) -> float:
    """Mean per-row Kendall tau-b; rows constant in either matrix are skipped."""
    taus = kendall_per_row(estimate, truth)
    scored = taus[~np.isnan(taus)]
    return float(scored.mean()) if scored.size else UNDEFINED


def relative_error_cells(estimate, truth) -> np.ndarray:
    est, tru = _aligned(estimate, truth)
    err = np.zeros_like(est)
    pos = tru > 0
    err[pos] = np.abs(est[pos] - tru[pos]) / tru[pos]
    err[~pos & (est > 0)] = 1.0
    return err


def relative_error_avg(estimate, truth) -> float:
    """|est - true| / true per cell, with a flat penalty of one for spurious edges."""
    return float(relative_error_cells(estimate, truth).mean())


def null_model_ranking(k: int, seed: int) -> np.ndarray:
    return np.random.default_rng(np.random.SeedSequence(int(seed))).random((k, k))


@dataclass(frozen=True)
class WoldAdequacy:
    per_process: dict
    median: float


def wold_adequacy(collection: ProcessCollection) -> WoldAdequacy:
    """Pearson correlation between consecutive inter-event times, per process."""
    per = {}
    for a, ta in enumerate(collection.processes):
        if ta.size < 3:
            continue
        gaps = np.diff(ta)
        x, y = gaps[:-1], gaps[1:]
        if x.size < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
            continue
        r = stats.pearsonr(x, y).statistic
        if math.isfinite(r):
            per[a] = float(r)
    median = float(np.median(list(per.values()))) if per else UNDEFINED
    return WoldAdequacy(per, median)

