"""Domain types, time-grid construction, and model validation.

The library works with a linear-quadratic mean-field model whose forward
drift couples to the backward component and whose backward driver couples
to the population mean of Y.  All types here are immutable after
construction and safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "InvalidArgumentError",
    "MonotonicityError",
    "DivergenceError",
    "StepSizeError",
    "InsufficientDataError",
    "TimeGrid",
    "LQParams",
    "MonotonicityCert",
    "Ensemble",
    "MeasureSummary",
    "make_grid",
    "validate_lq",
]


class InvalidArgumentError(ValueError):
    """An argument violates an operation's documented precondition."""


class MonotonicityError(ValueError):
    """The model parameters violate the monotonicity condition."""


class DivergenceError(RuntimeError):
    """A simulated path produced a non-finite state."""

    def __init__(self, step: int, path: int):
        self.step = step
        self.path = path
        super().__init__(f"non-finite state at step {step}, path {path}")


class StepSizeError(RuntimeError):
    """A backward recursion lost positivity; a finer time grid is required."""


class InsufficientDataError(ValueError):
    """Not enough finite data points for the requested fit."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of [0, T] with N steps of size tau = T/N."""

    T: float
    N: int
    tau: float
    nodes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.nodes.setflags(write=False)


def make_grid(T: float, N: int) -> TimeGrid:
    """Build the uniform grid with nodes t_i = i*T/N, i = 0..N."""
    if not (T > 0 and np.isfinite(T)):
        raise InvalidArgumentError(f"horizon must be positive and finite, got {T}")
    if N < 1:
        raise InvalidArgumentError(f"step count must be >= 1, got {N}")
    nodes = np.arange(N + 1) * (T / N)
    nodes[N] = T  # guard the endpoint against rounding drift
    return TimeGrid(T=float(T), N=int(N), tau=T / N, nodes=nodes)


@dataclass(frozen=True)
class LQParams:
    """Parameters of the linear-quadratic mean-field model.

    x0       deterministic initial state
    T        time horizon
    c_alpha  control cost (divides the forward drift), > 0
    sigma    volatility, >= 0 (0 gives a deterministic forward state)
    c_x      state cost in the backward driver, >= 0
    h_bar    mean-field impact on the backward driver, >= 0
    c_g      terminal condition weight, >= 0
    """

    x0: float
    T: float
    c_alpha: float
    sigma: float
    c_x: float
    h_bar: float
    c_g: float

    def __post_init__(self):
        if not (self.T > 0):
            raise InvalidArgumentError("T must be positive")
        if not (self.c_alpha > 0):
            raise InvalidArgumentError("c_alpha must be positive")
        for name in ("sigma", "c_x", "h_bar", "c_g"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be nonnegative")
        for name in ("x0", "T", "c_alpha", "sigma", "c_x", "h_bar", "c_g"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidArgumentError(f"{name} must be finite")

    @classmethod
    def from_dict(cls, cfg: dict) -> "LQParams":
        """Read parameters from a flat mapping with the canonical keys."""
        keys = ("x0", "T", "c_alpha", "sigma", "c_x", "h_bar", "c_g")
        missing = [k for k in keys if k not in cfg]
        if missing:
            raise InvalidArgumentError(f"missing configuration keys: {missing}")
        return cls(**{k: float(cfg[k]) for k in keys})


#: Parameter set used throughout the benchmark experiments.
PAPER_PARAMS = LQParams(
    x0=1.0, T=1.0, c_alpha=10.0 / 3.0, sigma=0.7, c_x=2.0, h_bar=2.0, c_g=0.3
)


@dataclass(frozen=True)
class MonotonicityCert:
    """Certificate that the model satisfies the monotonicity condition.

    For the scalar LQ model the certificate is G = 1, alpha = c_g,
    beta1 = 0 and beta2 = c_x - h_bar^2 / (4 c_alpha); L is a Lipschitz
    constant of the generator.
    """

    G: float
    alpha: float
    beta1: float
    beta2: float
    L: float

    def __post_init__(self):
        if not (self.alpha + self.beta1 > 0 and self.beta1 + self.beta2 > 0):
            raise MonotonicityError(
                "certificate constants must satisfy alpha+beta1 > 0 and beta1+beta2 > 0"
            )
        if self.G == 0:
            raise MonotonicityError("G must have full rank (nonzero for scalars)")


def validate_lq(p: LQParams) -> MonotonicityCert:
    """Check the monotonicity condition -c_x + h_bar^2/(4 c_alpha) < 0.

    Returns the certificate constants when the condition holds, raises
    :class:`MonotonicityError` naming the offending quantity otherwise.
    """
    gap = -p.c_x + p.h_bar**2 / (4.0 * p.c_alpha)
    if gap >= 0:
        raise MonotonicityError(
            f"monotonicity violated: -c_x + h_bar^2/(4 c_alpha) = {gap:.6g} >= 0"
        )
    return MonotonicityCert(G=1.0, alpha=p.c_g, beta1=0.0, beta2=-gap, L=_lipschitz(p))


def _lipschitz(p: LQParams) -> float:
    # b = -y/c_alpha, f = c_x x + (h_bar/c_alpha) E[Y], g = c_g x; sigma constant.
    return max(1.0 / p.c_alpha, p.c_x, p.h_bar / p.c_alpha, p.c_g)


@dataclass(frozen=True)
class Ensemble:
    """Simulated paths of (X, Y, Z) on a grid plus the driving increments.

    X and Y have shape (paths, N+1); Z and dW have shape (paths, N).
    """

    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    dW: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        n_paths = self.X.shape[0]
        N = self.grid.N
        if self.X.ndim != 2 or n_paths < 1:
            raise InvalidArgumentError("X must be a (paths, N+1) matrix with paths >= 1")
        for name, arr, cols in (
            ("X", self.X, N + 1),
            ("Y", self.Y, N + 1),
            ("Z", self.Z, N),
            ("dW", self.dW, N),
        ):
            if arr.shape != (n_paths, cols):
                raise InvalidArgumentError(
                    f"{name} must have shape ({n_paths}, {cols}), got {arr.shape}"
                )

    @property
    def n_paths(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class MeasureSummary:
    """Per-step means of (X, Y, Z), the empirical surrogate for the law.

    mean_X and mean_Y have length N+1, mean_Z length N.  When built from
    an ensemble the raw paths are kept so general empirical functionals
    remain available.
    """

    mean_X: np.ndarray
    mean_Y: np.ndarray
    mean_Z: np.ndarray
    ensemble: Optional[Ensemble] = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.mean_X) != len(self.mean_Y) or len(self.mean_Z) != len(self.mean_X) - 1:
            raise InvalidArgumentError("summary lengths must match the grid")

    @classmethod
    def from_ensemble(cls, e: Ensemble) -> "MeasureSummary":
        return cls(
            mean_X=e.X.mean(axis=0),
            mean_Y=e.Y.mean(axis=0),
            mean_Z=e.Z.mean(axis=0),
            ensemble=e,
        )
