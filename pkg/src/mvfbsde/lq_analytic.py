"""Closed-form benchmark machinery for the linear-quadratic model.

Provides
  * the affine decoupling coefficients eta(t), xi(t) of Y = eta X + xi,
    the mean-field coefficient bar_eta(t), the mean trajectory E[Y_t],
    and the deterministic Z(t) = sigma eta(t);
  * the discrete backward recursions (P_i, Q_i) and mean path mX_i that
    solve the time-discretized system exactly, used as an oracle;
  * reference path ensembles, the squared approximation error of a
    candidate against them, and a path-regularity estimate.

The xi integral has no elementary antiderivative, so it is evaluated by
composite trapezoid quadrature on a fine lattice tabulated once per
ClosedForm instance.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .core import (
    Ensemble,
    InvalidArgumentError,
    LQParams,
    StepSizeError,
    TimeGrid,
    make_grid,
)
from .sampling import SampleConfig, gen_increments

__all__ = [
    "ClosedForm",
    "ClosedFormValues",
    "RiccatiSolution",
    "TrueErrorReport",
    "eval_closed_form",
    "exact_triple_on_paths",
    "true_error",
    "riccati_discrete",
    "exact_discrete_solution",
    "estimate_path_regularity",
]


class ClosedFormValues(NamedTuple):
    eta: float
    xi: float
    bar_eta: float
    mean_Y: float
    z: float


def _cumtrapz(y: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum((y[1:] + y[:-1]) * (h / 2.0), out=out[1:])
    return out


class ClosedForm:
    """Exact continuous-time solution of the LQ model.

    eta solves the scalar Riccati ODE eta' = eta^2/c_alpha - c_x with
    eta(T) = c_g; bar_eta is its mean-field analogue and yields
    E[Y_t] = x0 bar_eta(t) exp(-(1/c_alpha) int_0^t bar_eta).  xi collects
    the mean-field feedback on the offset and vanishes at T.
    """

    def __init__(self, params: LQParams, quad_step: float):
        if not (quad_step > 0):
            raise InvalidArgumentError("quad_step must be positive")
        self.params = params
        self.quad_step = float(quad_step)
        p = params
        m = max(int(np.ceil(p.T / quad_step)), 2)
        s = np.linspace(0.0, p.T, m + 1)
        h = p.T / m
        self._s = s
        # cumulative integrals of eta and bar_eta from 0, then the xi kernel
        self._int_eta = _cumtrapz(self.eta(s), h)
        int_bar = _cumtrapz(self.bar_eta(s), h)
        self._mean_y_tab = p.x0 * self.bar_eta(s) * np.exp(-int_bar / p.c_alpha)
        self._int_bar_eta = int_bar
        kernel = self._mean_y_tab * np.exp(-self._int_eta / p.c_alpha)
        self._int_kernel = _cumtrapz(kernel, h)

    def _check_domain(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.params.T):
            raise InvalidArgumentError(f"time {t} outside [0, {self.params.T}]")
        return t

    def eta(self, t):
        p = self.params
        r = np.sqrt(p.c_x / p.c_alpha)
        a = p.c_alpha * r
        e = np.exp(2.0 * r * (p.T - np.asarray(t, dtype=float)))
        return -a * (a - p.c_g - (a + p.c_g) * e) / (a - p.c_g + (a + p.c_g) * e)

    def bar_eta(self, t):
        p = self.params
        b = 1.0 / p.c_alpha
        c = p.c_x
        d = -p.h_bar / (2.0 * p.c_alpha)
        root = np.sqrt(d * d + b * c)
        dp, dm = -d + root, -d - root
        e = np.exp((dp - dm) * (p.T - np.asarray(t, dtype=float)))
        return (-c * (e - 1.0) - p.c_g * (dp * e - dm)) / (
            (dm * e - dp) - p.c_g * b * (e - 1.0)
        )

    def z(self, t):
        return self.params.sigma * self.eta(t)

    def mean_Y(self, t):
        t = self._check_domain(t)
        p = self.params
        int_bar = np.interp(t, self._s, self._int_bar_eta)
        return p.x0 * self.bar_eta(t) * np.exp(-int_bar / p.c_alpha)

    def xi(self, t):
        t = self._check_domain(t)
        p = self.params
        if p.h_bar == 0.0:
            return np.zeros_like(t) if t.ndim else 0.0
        int_eta = np.interp(t, self._s, self._int_eta)
        tail = self._int_kernel[-1] - np.interp(t, self._s, self._int_kernel)
        return (p.h_bar / p.c_alpha) * np.exp(int_eta / p.c_alpha) * tail

    def at(self, t: float) -> ClosedFormValues:
        t = float(self._check_domain(t))
        return ClosedFormValues(
            eta=float(self.eta(t)),
            xi=float(self.xi(t)),
            bar_eta=float(self.bar_eta(t)),
            mean_Y=float(self.mean_Y(t)),
            z=float(self.z(t)),
        )


def eval_closed_form(t: float, p: LQParams, quad_step: float) -> ClosedFormValues:
    """Evaluate (eta, xi, bar_eta, E[Y], z) at a single time."""
    return ClosedForm(p, quad_step).at(t)


def _default_quad_step(grid: TimeGrid) -> float:
    return grid.tau / 50.0


def exact_triple_on_paths(
    increments: np.ndarray,
    p: LQParams,
    grid: TimeGrid,
    quad_step: Optional[float] = None,
) -> Ensemble:
    """Reference triple on given increments: explicit Euler X with the exact
    affine drift, Y = eta X + xi, and the deterministic Z = sigma eta."""
    cf = ClosedForm(p, quad_step or _default_quad_step(grid))
    t = grid.nodes
    eta = cf.eta(t)
    xi = np.asarray(cf.xi(t))
    n_paths = increments.shape[0]
    X = np.empty((n_paths, grid.N + 1))
    X[:, 0] = p.x0
    for i in range(grid.N):
        drift = (eta[i] * X[:, i] + xi[i]) / p.c_alpha
        X[:, i + 1] = X[:, i] - drift * grid.tau + p.sigma * increments[:, i]
    Y = eta[None, :] * X + xi[None, :]
    Z = np.broadcast_to(p.sigma * eta[:-1], (n_paths, grid.N)).copy()
    return Ensemble(X=X, Y=Y, Z=Z, dW=increments, grid=grid)


@dataclass(frozen=True)
class TrueErrorReport:
    """Squared approximation error against the reference triple.

    total = max_i (x_profile[i] + y_profile[i]) + sum_i z_profile[i] * tau.
    """

    total: float
    x_profile: np.ndarray
    y_profile: np.ndarray
    z_profile: np.ndarray


def true_error(
    candidate: Ensemble,
    p: LQParams,
    grid: TimeGrid,
    quad_step: Optional[float] = None,
) -> TrueErrorReport:
    """Squared error of a candidate, sharing the candidate's increments.

    The reference X is rebuilt from candidate.dW (common random numbers),
    so only discretization and solver error remain.  The reference has a
    second-order-in-tau bias versus the continuous solution, which is not
    corrected here.
    """
    if candidate.grid.N != grid.N or candidate.grid.T != grid.T:
        raise InvalidArgumentError("candidate grid does not match")
    ref = exact_triple_on_paths(candidate.dW, p, grid, quad_step)
    x_prof = np.mean((ref.X - candidate.X) ** 2, axis=0)
    y_prof = np.mean((ref.Y - candidate.Y) ** 2, axis=0)
    z_prof = np.mean((ref.Z - candidate.Z) ** 2, axis=0)
    total = float(np.max(x_prof + y_prof) + np.sum(z_prof) * grid.tau)
    return TrueErrorReport(total=total, x_profile=x_prof, y_profile=y_prof, z_profile=z_prof)


@dataclass(frozen=True)
class RiccatiSolution:
    """Deterministic sequences solving the discrete system exactly.

    P and Q follow semi-implicit backward recursions with P_N = Q_N = c_g:

        P_i (1 + P_{i+1} tau / c_alpha) = P_{i+1} + c_x tau
        Q_i (1 + Q_{i+1} tau / c_alpha - (h_bar / c_alpha) tau) = Q_{i+1} + c_x tau

    and the mean state runs forward, mX_{i+1} = mX_i (1 - Q_i tau / c_alpha).
    The exact discrete solution is Y_i = P_i X_i + (Q_i - P_i) mX_i with
    E[Y_i] = Q_i mX_i.
    """

    P: np.ndarray
    Q: np.ndarray
    mX: np.ndarray
    grid: TimeGrid = field(repr=False)

    @property
    def mY(self) -> np.ndarray:
        return self.Q * self.mX

    @property
    def offset(self) -> np.ndarray:
        return (self.Q - self.P) * self.mX


def riccati_discrete(p: LQParams, grid: TimeGrid) -> RiccatiSolution:
    """Run the backward P/Q recursions and the forward mean recursion.

    Raises :class:`StepSizeError` when the Q denominator loses positivity,
    which can happen on coarse grids with a large mean-field impact.
    """
    N, tau = grid.N, grid.tau
    P = np.empty(N + 1)
    Q = np.empty(N + 1)
    P[N] = Q[N] = p.c_g
    for i in range(N - 1, -1, -1):
        P[i] = (P[i + 1] + p.c_x * tau) / (1.0 + P[i + 1] * tau / p.c_alpha)
        den = 1.0 + Q[i + 1] * tau / p.c_alpha - (p.h_bar / p.c_alpha) * tau
        if den <= 0:
            raise StepSizeError(
                f"backward recursion denominator {den:.6g} <= 0 at step {i}; "
                f"use a finer grid (tau={tau:.6g})"
            )
        Q[i] = (Q[i + 1] + p.c_x * tau) / den
    mX = np.empty(N + 1)
    mX[0] = p.x0
    for i in range(N):
        mX[i + 1] = mX[i] - Q[i] * mX[i] * tau / p.c_alpha
    return RiccatiSolution(P=P, Q=Q, mX=mX, grid=grid)


def exact_discrete_solution(
    increments: np.ndarray, r: RiccatiSolution, p: LQParams, grid: TimeGrid
) -> Ensemble:
    """Pathwise-exact solution of the discrete system on given increments.

    The mean-field term enters through the analytic mean Q_i mX_i, and the
    martingale part of Y gives Z_i = P_{i+1} sigma.
    """
    if r.grid.N != grid.N:
        raise InvalidArgumentError("Riccati solution computed on a different grid")
    n_paths = increments.shape[0]
    off = r.offset
    X = np.empty((n_paths, grid.N + 1))
    X[:, 0] = p.x0
    for i in range(grid.N):
        y_i = r.P[i] * X[:, i] + off[i]
        X[:, i + 1] = X[:, i] - y_i * grid.tau / p.c_alpha + p.sigma * increments[:, i]
    Y = r.P[None, :] * X + off[None, :]
    Z = np.broadcast_to(r.P[1:] * p.sigma, (n_paths, grid.N)).copy()
    return Ensemble(X=X, Y=Y, Z=Z, dW=increments, grid=grid)


def estimate_path_regularity(
    p: LQParams,
    grid: TimeGrid,
    fine_factor: int,
    n_paths: int = 4096,
    seed: int = 0,
    quad_step: Optional[float] = None,
) -> float:
    """Mean-square modulus of continuity of (X, Y, Z) over grid cells.

    Simulates X on a grid refined by fine_factor with the exact affine
    drift, takes the within-cell maximum of E|X_t - X_{t_i}|^2 +
    E|Y_t - Y_{t_i}|^2, and adds the quadrature value of the deterministic
    Z-oscillation term using the cell averages of sigma eta.  First-order
    in tau for this model.
    """
    if fine_factor < 10:
        raise InvalidArgumentError("fine_factor must be >= 10")
    fine = make_grid(grid.T, grid.N * fine_factor)
    cf = ClosedForm(p, quad_step or _default_quad_step(fine))
    eta = cf.eta(fine.nodes)
    xi = np.asarray(cf.xi(fine.nodes))
    dW = gen_increments(SampleConfig(seed=seed, paths=n_paths), fine)
    X = np.empty((n_paths, fine.N + 1))
    X[:, 0] = p.x0
    for k in range(fine.N):
        drift = (eta[k] * X[:, k] + xi[k]) / p.c_alpha
        X[:, k + 1] = X[:, k] - drift * fine.tau + p.sigma * dW[:, k]
    Y = eta[None, :] * X + xi[None, :]

    xy_max = 0.0
    z_term = 0.0
    z_fine = p.sigma * eta
    for i in range(grid.N):
        lo, hi = i * fine_factor, (i + 1) * fine_factor
        dx = X[:, lo : hi + 1] - X[:, lo][:, None]
        dy = Y[:, lo : hi + 1] - Y[:, lo][:, None]
        xy_max = max(xy_max, float(np.max(np.mean(dx**2, axis=0) + np.mean(dy**2, axis=0))))
        cell = z_fine[lo : hi + 1]
        z_bar = np.trapezoid(cell, dx=fine.tau) / grid.tau
        z_term += float(np.trapezoid((cell - z_bar) ** 2, dx=fine.tau))
    return xy_max + z_term
