"""Indicator basis on a computational domain and least-squares projection.

The basis partitions the real line into K bins: an open left tail below
x_min, K-2 equal-width half-open interior bins [left, right), and a right
tail closed at x_max.  Every point activates exactly one indicator, so the
least-squares projection of a Monte Carlo target reduces to per-bin means
and the normal equations are diagonal (no regularization needed).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InvalidArgumentError

__all__ = ["BasisSpec", "basis_index", "fit_weights", "evaluate_policy"]


@dataclass(frozen=True)
class BasisSpec:
    """Computational domain [x_min, x_max] split into K indicator bins."""

    x_min: float
    x_max: float
    K: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise InvalidArgumentError("x_min must be strictly below x_max")
        if self.K < 3:
            raise InvalidArgumentError("need at least 3 bins (two tails + one interior)")

    @property
    def interior_width(self) -> float:
        return (self.x_max - self.x_min) / (self.K - 2)

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "K": self.K}

    @classmethod
    def from_dict(cls, d: dict) -> "BasisSpec":
        return cls(x_min=float(d["x_min"]), x_max=float(d["x_max"]), K=int(d["K"]))


def basis_index(x, basis: BasisSpec):
    """1-based index of the unique active indicator (vectorized).

    A point on an interior bin's left edge belongs to that bin; x_max
    belongs to the right tail.
    """
    x = np.asarray(x)
    k = np.floor((x - basis.x_min) / basis.interior_width).astype(np.int64) + 2
    idx = np.clip(k, 1, basis.K)
    idx = np.where(x < basis.x_min, 1, idx)
    idx = np.where(x >= basis.x_max, basis.K, idx)
    return int(idx) if idx.ndim == 0 else idx


def fit_weights(xs: np.ndarray, targets: np.ndarray, basis: BasisSpec) -> np.ndarray:
    """Least-squares weights of the indicator expansion: per-bin target means.

    Bins that no sample visits get weight 0, which keeps the fitted field
    square integrable and matches a zero prior on unexplored regions.
    """
    xs = np.asarray(xs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if xs.size == 0:
        raise InvalidArgumentError("cannot fit weights from an empty sample")
    if xs.shape != targets.shape:
        raise InvalidArgumentError("xs and targets must have equal length")
    idx = basis_index(xs, basis) - 1
    counts = np.bincount(idx, minlength=basis.K)
    sums = np.bincount(idx, weights=targets, minlength=basis.K)
    weights = np.zeros(basis.K)
    occupied = counts > 0
    weights[occupied] = sums[occupied] / counts[occupied]
    return weights


def evaluate_policy(weights: np.ndarray, x, basis: BasisSpec):
    """Evaluate the piecewise-constant field: the active bin's weight."""
    weights = np.asarray(weights)
    if weights.shape != (basis.K,):
        raise InvalidArgumentError(f"expected {basis.K} weights, got {weights.shape}")
    return weights[np.asarray(basis_index(x, basis)) - 1]
