"""Hybrid solver: Picard iteration over decoupling fields with forward Euler
rollout and backward least-squares regression.

Each iteration freezes the current Y-field, rolls the forward state out
along fresh increments, then sweeps backward refitting both fields per time
step.  The regression targets at step i use the iteration's already-updated
field at step i+1:

    beta-target  = (dW_i / tau) * y_{i+1}(X_{i+1})
    alpha-target = y_{i+1}(X_{i+1})
                   + tau * ( c_x X_i + (h_bar/c_alpha) * mean_l y_{i+1}(X^l_{i+1}) )

with the terminal field y_N(x) = c_g x.  The X-cost term is evaluated at
X_i (implicit-in-X discretization, no extrapolation), and the mean-field
term is the within-system empirical mean over the regression paths.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .basis import BasisSpec, basis_index, fit_weights
from .core import DivergenceError, Ensemble, InvalidArgumentError, LQParams, TimeGrid
from .sampling import SampleConfig, derive_seed, gen_increments

__all__ = [
    "DecoupledPolicy",
    "PicardConfig",
    "forward_rollout",
    "backward_pass",
    "rollout_ensemble",
    "picard_solve",
]

YField = Callable[[int, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DecoupledPolicy:
    """Per-step regression weights for the approximate decoupling fields.

    alpha[i] parameterizes the Y-field at steps 0..N-1 and beta[i] the
    Z-field; the terminal rule is Y_N = c_g X_N.
    """

    alpha: np.ndarray
    beta: np.ndarray
    basis: BasisSpec
    c_g: float

    def __post_init__(self):
        if self.alpha.shape != self.beta.shape or self.alpha.ndim != 2:
            raise InvalidArgumentError("alpha and beta must be matching (N, K) matrices")
        if self.alpha.shape[1] != self.basis.K:
            raise InvalidArgumentError("weight columns must match the basis size")
        if not (np.isfinite(self.alpha).all() and np.isfinite(self.beta).all()):
            raise InvalidArgumentError("policy weights must be finite")

    @property
    def n_steps(self) -> int:
        return self.alpha.shape[0]

    def y_at(self, i: int, x: np.ndarray) -> np.ndarray:
        """Y-field at step i; step N applies the terminal rule c_g x."""
        if i == self.n_steps:
            return self.c_g * np.asarray(x)
        return self.alpha[i][basis_index(x, self.basis) - 1]

    def z_at(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.beta[i][basis_index(x, self.basis) - 1]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "basis": self.basis.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict, c_g: float) -> "DecoupledPolicy":
        return cls(
            alpha=np.asarray(d["alpha"], dtype=float),
            beta=np.asarray(d["beta"], dtype=float),
            basis=BasisSpec.from_dict(d["basis"]),
            c_g=c_g,
        )


@dataclass(frozen=True)
class PicardConfig:
    """Iteration count, regression sample size, and increment policy.

    crn=False draws fresh increments inside every iteration; crn=True
    reuses one set across iterations for variance reduction.  initial_y
    is the constant initial guess for every Y-field weight (1/K when
    omitted).
    """

    P: int
    lambda_reg: int
    crn: bool = False
    initial_y: Optional[float] = None

    def __post_init__(self):
        if self.P < 1:
            raise InvalidArgumentError("need at least one iteration")
        if self.lambda_reg < 1:
            raise InvalidArgumentError("need at least one regression path")


def forward_rollout(
    field_y: YField, increments: np.ndarray, p: LQParams, grid: TimeGrid
) -> np.ndarray:
    """Roll the forward state out under a frozen Y-field.

    X_{i+1} = X_i - y_i(X_i) tau / c_alpha + sigma dW_i with X_0 = x0;
    returns the (paths, N+1) state matrix, which satisfies the recursion
    exactly.  Raises :class:`DivergenceError` on the first non-finite state.
    """
    n_paths, n_cols = increments.shape
    if n_cols != grid.N:
        raise InvalidArgumentError(f"increments must have {grid.N} columns")
    X = np.empty((n_paths, grid.N + 1))
    X[:, 0] = p.x0
    for i in range(grid.N):
        y_i = field_y(i, X[:, i])
        X[:, i + 1] = X[:, i] - y_i * grid.tau / p.c_alpha + p.sigma * increments[:, i]
        bad = ~np.isfinite(X[:, i + 1])
        if bad.any():
            raise DivergenceError(step=i + 1, path=int(np.argmax(bad)))
    return X


def backward_pass(
    X_paths: np.ndarray,
    increments: np.ndarray,
    p: LQParams,
    grid: TimeGrid,
    basis: BasisSpec,
) -> DecoupledPolicy:
    """Refit both decoupling fields backward from the terminal rule.

    X_paths must come from a rollout driven by the same increments.
    """
    N = grid.N
    if X_paths.shape != (increments.shape[0], N + 1):
        raise InvalidArgumentError("X paths do not match the increments")
    alpha = np.empty((N, basis.K))
    beta = np.empty((N, basis.K))
    y_next = p.c_g * X_paths[:, N]
    for i in range(N - 1, -1, -1):
        x_i = X_paths[:, i]
        beta[i] = fit_weights(x_i, increments[:, i] / grid.tau * y_next, basis)
        mean_field = p.h_bar / p.c_alpha * np.mean(y_next)
        targets = y_next + grid.tau * (p.c_x * x_i + mean_field)
        bad = ~np.isfinite(targets)
        if bad.any():  # overflow in a target: the iteration has diverged
            raise DivergenceError(step=i, path=int(np.argmax(bad)))
        alpha[i] = fit_weights(x_i, targets, basis)
        y_next = alpha[i][basis_index(x_i, basis) - 1]
    return DecoupledPolicy(alpha=alpha, beta=beta, basis=basis, c_g=p.c_g)


def rollout_ensemble(
    policy: DecoupledPolicy, increments: np.ndarray, p: LQParams, grid: TimeGrid
) -> Ensemble:
    """Roll a policy out and read (Y, Z) off its fields along the paths.

    The result is rollout-consistent: Y_i = y_i(X_i) and Z_i = z_i(X_i)
    exactly, and Y_N = c_g X_N exactly.
    """
    X = forward_rollout(policy.y_at, increments, p, grid)
    n_paths = X.shape[0]
    Y = np.empty((n_paths, grid.N + 1))
    Z = np.empty((n_paths, grid.N))
    for i in range(grid.N):
        Y[:, i] = policy.y_at(i, X[:, i])
        Z[:, i] = policy.z_at(i, X[:, i])
    Y[:, grid.N] = p.c_g * X[:, grid.N]
    return Ensemble(X=X, Y=Y, Z=Z, dW=increments, grid=grid)


def picard_solve(
    p: LQParams,
    grid: TimeGrid,
    basis: BasisSpec,
    cfg: PicardConfig,
    seed: int,
) -> Tuple[DecoupledPolicy, Ensemble]:
    """Alternate rollouts and backward passes, then roll the final policy out.

    Iteration k draws its increments from the substream (seed, k), or from
    (seed, 0) for every iteration under crn; the returned ensemble is the
    rollout of the last policy on the substream after the final iteration.
    Divergence of a rollout raises; it is a legitimate outcome for strong
    forward-backward coupling rather than a bug.
    """
    init = 1.0 / basis.K if cfg.initial_y is None else cfg.initial_y
    policy = DecoupledPolicy(
        alpha=np.full((grid.N, basis.K), init),
        beta=np.zeros((grid.N, basis.K)),
        basis=basis,
        c_g=p.c_g,
    )
    for k in range(1, cfg.P + 1):
        dw = _iteration_increments(cfg, grid, seed, k)
        X = forward_rollout(policy.y_at, dw, p, grid)
        policy = backward_pass(X, dw, p, grid, basis)
    dw = _iteration_increments(cfg, grid, seed, cfg.P + 1)
    return policy, rollout_ensemble(policy, dw, p, grid)


def _iteration_increments(
    cfg: PicardConfig, grid: TimeGrid, seed: int, iteration: int
) -> np.ndarray:
    stream = 0 if cfg.crn else iteration
    sample = SampleConfig(seed=derive_seed(seed, stream), paths=cfg.lambda_reg)
    return gen_increments(sample, grid)
