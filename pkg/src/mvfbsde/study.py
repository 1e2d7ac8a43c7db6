"""Parameter schedules, convergence studies, slope fits, and CSV emission.

A study runs the hybrid solver across a geometric ladder of discretization
levels j, with the step count, basis size, and regression sample size tied
together by

    N = [2 sqrt(2)^(j-1)],  K = max(ceil(sqrt(2)^(j-1)), 3),
    Lambda = [2 sqrt(2)^(l (j-1))],   l in {3, 4, 5},

where [.] rounds half away from zero.  Each row re-solves from scratch and
is evaluated on fresh paths whose seed stream is independent of the
regression stream; both derive deterministically from (seed, j, l), so rows
can run in any order without changing results.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, fields
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .basis import BasisSpec
from .core import (
    DivergenceError,
    InsufficientDataError,
    InvalidArgumentError,
    LQParams,
    make_grid,
)
from .estimator import evaluate_estimator, lq_generator
from .lq_analytic import true_error
from .picard import PicardConfig, picard_solve, rollout_ensemble
from .sampling import SampleConfig, derive_seed, gen_increments

__all__ = [
    "ScheduleEntry",
    "StudyRow",
    "schedule",
    "run_study",
    "fit_slope",
    "write_csv",
    "read_csv",
    "CSV_HEADER",
]

CSV_HEADER = "j,l,N,K,Lambda,P,seed,estimator_total,true_sq_error,ratio,runtime_seconds"


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


@dataclass(frozen=True)
class ScheduleEntry:
    j: int
    l: int
    N: int
    K: int
    Lambda: int


def schedule(j: int, l: int) -> ScheduleEntry:
    """Derive (N, K, Lambda) for level j and sample-size exponent l.

    sqrt(2)^(j-1) is computed as 2^((j-1)/2) so that even j-1 stays exact
    in floating point and the ceiling never overshoots.
    """
    if j < 2:
        raise InvalidArgumentError(f"level j must be >= 2, got {j}")
    if l not in (3, 4, 5):
        raise InvalidArgumentError(f"l must be one of 3, 4, 5, got {l}")
    root = 2.0 ** ((j - 1) / 2.0)
    return ScheduleEntry(
        j=j,
        l=l,
        N=_round_half_away(2.0 * root),
        K=max(math.ceil(root), 3),
        Lambda=_round_half_away(2.0 * 2.0 ** (l * (j - 1) / 2.0)),
    )


@dataclass(frozen=True)
class StudyRow:
    """One study result; divergent solves carry infinite error fields."""

    j: int
    l: int
    N: int
    K: int
    Lambda: int
    P: int
    seed: int
    estimator_total: float
    true_sq_error: float
    ratio: float
    runtime_seconds: float

    @property
    def diverged(self) -> bool:
        return not (math.isfinite(self.estimator_total) and math.isfinite(self.true_sq_error))


def run_study(
    p: LQParams,
    j_range: Iterable[int],
    l: int,
    P: int,
    seed: int,
    eval_paths: int = 10_000,
    basis_domain: tuple = (0.0, 2.0),
    crn: bool = False,
    initial_y: Optional[float] = None,
) -> List[StudyRow]:
    """Solve and evaluate one row per level j.

    Evaluation generates eval_paths fresh increments, rolls both the fitted
    policy and the reference triple along them (common random numbers), and
    reports the error estimator (empirical means) next to the squared error
    against the reference.  A divergent solve yields an inf-valued row and
    the study continues.
    """
    rows = []
    for j in j_range:
        entry = schedule(j, l)
        grid = make_grid(p.T, entry.N)
        basis = BasisSpec(x_min=basis_domain[0], x_max=basis_domain[1], K=entry.K)
        cfg = PicardConfig(P=P, lambda_reg=entry.Lambda, crn=crn, initial_y=initial_y)
        start = time.perf_counter()
        est_total = true_sq = ratio = math.inf
        try:
            policy, _ = picard_solve(p, grid, basis, cfg, seed=derive_seed(seed, j, l, 0))
            eval_cfg = SampleConfig(seed=derive_seed(seed, j, l, 1), paths=eval_paths)
            dw = gen_increments(eval_cfg, grid)
            candidate = rollout_ensemble(policy, dw, p, grid)
            report = evaluate_estimator(candidate, lq_generator(p), grid)
            err = true_error(candidate, p, grid)
            est_total, true_sq = report.total, err.total
            ratio = est_total / true_sq if true_sq > 0 else math.inf
        except DivergenceError:
            pass
        rows.append(
            StudyRow(
                j=j,
                l=l,
                N=entry.N,
                K=entry.K,
                Lambda=entry.Lambda,
                P=P,
                seed=seed,
                estimator_total=est_total,
                true_sq_error=true_sq,
                ratio=ratio,
                runtime_seconds=time.perf_counter() - start,
            )
        )
    return rows


def fit_slope(rows: Sequence[StudyRow]) -> float:
    """Least-squares slope of log(estimator_total) against log(N)."""
    pts = [
        (math.log(r.N), math.log(r.estimator_total))
        for r in rows
        if math.isfinite(r.estimator_total) and r.estimator_total > 0
    ]
    if len(pts) < 3:
        raise InsufficientDataError(f"need >= 3 finite rows to fit a slope, got {len(pts)}")
    x = np.array([q[0] for q in pts])
    y = np.array([q[1] for q in pts])
    design = np.vstack([x, np.ones_like(x)]).T
    return float(np.linalg.lstsq(design, y, rcond=None)[0][0])


def write_csv(rows: Sequence[StudyRow], path: str) -> None:
    """Emit rows under the fixed header, full-precision decimal fields."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER.split(","))
        for r in rows:
            writer.writerow(
                [
                    r.j,
                    r.l,
                    r.N,
                    r.K,
                    r.Lambda,
                    r.P,
                    r.seed,
                    repr(r.estimator_total),
                    repr(r.true_sq_error),
                    repr(r.ratio),
                    repr(r.runtime_seconds),
                ]
            )


def read_csv(path: str) -> List[StudyRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER.split(","):
            raise InvalidArgumentError(f"unexpected CSV header in {path}")
        int_fields = {"j", "l", "N", "K", "Lambda", "P", "seed"}
        rows = []
        for rec in reader:
            kwargs = {
                f.name: (int(rec[f.name]) if f.name in int_fields else float(rec[f.name]))
                for f in fields(StudyRow)
            }
            rows.append(StudyRow(**kwargs))
    return rows
