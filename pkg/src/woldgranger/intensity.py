"""Conditional intensity, the cross-intensity matrix and stationarity checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ContractError, ModelParams, ProcessCollection
from .timeline import delta_cross


class NonStationaryError(ContractError):
    pass


@dataclass(frozen=True)
class CrossIntensityMatrix:
    """Entry (b, a) is alpha_ba / (beta_b + Delta_ba(t))."""

    entries: np.ndarray
    eval_time: float

    @property
    def K(self) -> int:
        return self.entries.shape[0]


def cross_intensity(params: ModelParams, collection: ProcessCollection, b: int, a: int, t: float) -> float:
    collection.check_params(params)
    delta = delta_cross(collection, b, a, t)
    alpha = params.granger[b, a]
    if delta.value is None or alpha == 0:
        return 0.0
    return float(alpha / (params.beta[b] + delta.value))


def total_intensity(params: ModelParams, collection: ProcessCollection, a: int, t: float) -> float:
    """mu_a plus the Wold term of every influencer; missing increments add nothing."""
    collection.check_params(params)
    return float(params.mu[a]) + sum(
        cross_intensity(params, collection, b, a, t) for b in range(collection.K)
    )


def phi_matrix(params: ModelParams, collection: ProcessCollection, t: float) -> CrossIntensityMatrix:
    collection.check_params(params)
    k = collection.K
    entries = np.zeros((k, k))
    for b in range(k):
        for a in range(k):
            entries[b, a] = cross_intensity(params, collection, b, a, t)
    return CrossIntensityMatrix(entries, float(t))


def stationarity_check(phi) -> tuple[float, bool]:
    """Induced infinity norm (max row sum) and whether it is below one."""
    entries = phi.entries if isinstance(phi, CrossIntensityMatrix) else np.asarray(phi, dtype=float)
    norm = float(np.abs(entries).sum(axis=1).max()) if entries.size else 0.0
    return norm, norm < 1.0


def _solve_identity_minus(m):
    """Invert I - m by Gauss-Jordan elimination with partial pivoting."""
    k = m.shape[0]
    a = np.eye(k) - m
    inv = np.eye(k)
    for col in range(k):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if a[pivot, col] == 0:
            raise NonStationaryError("series diverges: I - Phi is singular")
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            inv[[col, pivot]] = inv[[pivot, col]]
        scale = a[col, col]
        a[col] /= scale
        inv[col] /= scale
        factors = a[:, col].copy()
        factors[col] = 0.0
        a -= np.outer(factors, a[col])
        inv -= np.outer(factors, inv[col])
    return inv


def expected_offspring(phi) -> np.ndarray:
    """Sum of all powers of Phi, i.e. (I - Phi)^-1."""
    entries = phi.entries if isinstance(phi, CrossIntensityMatrix) else np.asarray(phi, dtype=float)
    _, stationary = stationarity_check(entries)
    if not stationary:
        raise NonStationaryError("series diverges: max row sum of Phi is not below 1")
    return _solve_identity_minus(entries)
