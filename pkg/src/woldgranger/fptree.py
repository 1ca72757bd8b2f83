"""F+Tree: a flat binary tree of partial sums for O(log K) categorical sampling.

Node 1 is the root, node i has children 2i and 2i+1, and leaf j lives at
``capacity + j``. Padding leaves beyond K hold zero. The array functions are
compiled so the samplers can call them from inside their kernels.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .core import ContractError, ValidationError


def capacity_for(k: int) -> int:
    cap = 1
    while cap < k:
        cap *= 2
    return cap


@njit(cache=True)
def tree_fill(tree, weights):
    cap = tree.size // 2
    tree[:] = 0.0
    for j in range(weights.size):
        tree[cap + j] = weights[j]
    for i in range(cap - 1, 0, -1):
        tree[i] = tree[2 * i] + tree[2 * i + 1]


@njit(cache=True)
def tree_update(tree, j, w):
    cap = tree.size // 2
    i = cap + j
    tree[i] = w
    i //= 2
    while i >= 1:
        tree[i] = tree[2 * i] + tree[2 * i + 1]
        i //= 2


@njit(cache=True)
def tree_sample(tree, k, r):
    """Leaf j with prefix(j) <= r < prefix(j + 1); r must lie in [0, root)."""
    cap = tree.size // 2
    i = 1
    while i < cap:
        left = tree[2 * i]
        if r < left:
            i = 2 * i
        else:
            r -= left
            i = 2 * i + 1
    j = i - cap
    # rounding in the subtractions can land on an empty leaf at the far right
    while (j >= k or tree[cap + j] <= 0.0) and j > 0:
        j -= 1
    return j


class FPTree:
    """Sampling tree over K nonnegative weights."""

    def __init__(self, weights):
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if weights.size < 1:
            raise ValidationError("FPTree needs at least one weight")
        self._check(weights)
        self.K = weights.size
        self.capacity = capacity_for(self.K)
        self.tree = np.zeros(2 * self.capacity)
        tree_fill(self.tree, weights)

    @staticmethod
    def _check(weights):
        bad = np.flatnonzero(~(weights >= 0) | ~np.isfinite(weights))
        if bad.size:
            j = int(bad[0])
            raise ValidationError(f"weight {j} is {weights[j]!r}; weights must be finite and >= 0")

    @property
    def root(self) -> float:
        return float(self.tree[1])

    @property
    def weights(self) -> np.ndarray:
        return self.tree[self.capacity:self.capacity + self.K].copy()

    def sample(self, r: float) -> int:
        if not 0.0 <= r < self.root:
            raise ContractError(f"r = {r!r} outside [0, {self.root!r})")
        return int(tree_sample(self.tree, self.K, r))

    def update(self, j: int, w: float):
        if not 0 <= j < self.K:
            raise ValidationError(f"leaf index {j} outside [0, {self.K})")
        self._check(np.array([w], dtype=np.float64))
        tree_update(self.tree, j, float(w))

    def audit(self, rtol: float = 1e-9) -> bool:
        """True when every internal node equals the sum of its children."""
        cap = self.capacity
        if np.any(self.tree[cap + self.K:] != 0):
            return False
        for i in range(1, cap):
            expected = self.tree[2 * i] + self.tree[2 * i + 1]
            if abs(self.tree[i] - expected) > rtol * max(abs(expected), 1e-300):
                return False
        return True


def build(weights) -> FPTree:
    return FPTree(weights)
