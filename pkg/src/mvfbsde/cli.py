"""Command-line entry point.

Subcommands: solve, estimate, shoot, oracle, schedule, study.  Exit codes:
0 on success, 2 for invalid arguments, 3 when the model parameters fail the
monotonicity validation.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Optional

import numpy as np

from .basis import BasisSpec
from .core import (
    PAPER_PARAMS,
    InsufficientDataError,
    InvalidArgumentError,
    LQParams,
    MeasureSummary,
    MonotonicityError,
    StepSizeError,
    make_grid,
    validate_lq,
)
from .estimator import evaluate_estimator, lq_generator
from .lq_analytic import exact_discrete_solution, riccati_discrete
from .picard import DecoupledPolicy, PicardConfig, picard_solve, rollout_ensemble
from .sampling import SampleConfig, gen_increments
from .shooting import solve_shooting
from .study import fit_slope, run_study, schedule, write_csv

__all__ = ["main", "build_parser"]

_DESK_CAP = {3: 9, 4: 9, 5: 8}


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _params_from_config(cfg: dict) -> LQParams:
    flat = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    if not flat:
        return PAPER_PARAMS
    return LQParams.from_dict(flat)


def _basis_from_config(cfg: dict, K_flag: Optional[int]) -> BasisSpec:
    b = cfg.get("basis", {})
    K = K_flag if K_flag is not None else int(b.get("K", 12))
    return BasisSpec(
        x_min=float(b.get("x_min", 0.0)),
        x_max=float(b.get("x_max", 2.0)),
        K=K,
    )


def _emit(payload: dict, out: Optional[str]) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    params = _params_from_config(cfg)
    validate_lq(params)
    picard_cfg = cfg.get("picard", {})
    grid = make_grid(params.T, args.steps)
    basis = _basis_from_config(cfg, args.bins)
    solver_cfg = PicardConfig(
        P=args.picard if args.picard is not None else int(picard_cfg.get("P", 5)),
        lambda_reg=args.paths
        if args.paths is not None
        else int(picard_cfg.get("lambda_reg", 10_000)),
        crn=args.crn or bool(picard_cfg.get("crn", False)),
        initial_y=picard_cfg.get("init"),
    )
    start = time.perf_counter()
    policy, ensemble = picard_solve(params, grid, basis, solver_cfg, seed=args.seed)
    _emit(policy.to_dict(), args.out)
    print(
        f"solved N={grid.N} K={basis.K} paths={solver_cfg.lambda_reg} "
        f"P={solver_cfg.P} seed={args.seed}: "
        f"y0(x0)={float(policy.y_at(0, np.array(params.x0))):.6g} "
        f"E[X_N]={ensemble.X[:, -1].mean():.6g} "
        f"({time.perf_counter() - start:.2f}s)",
        file=sys.stderr,
    )
    return 0


def _cmd_estimate(args) -> int:
    cfg = _load_config(args.config)
    params = _params_from_config(cfg)
    validate_lq(params)
    sample = SampleConfig(seed=args.seed, paths=args.paths, antithetic=args.antithetic)
    if args.oracle:
        grid = make_grid(params.T, args.steps)
        ric = riccati_discrete(params, grid)
        dw = gen_increments(sample, grid)
        ensemble = exact_discrete_solution(dw, ric, params, grid)
        means = MeasureSummary(mean_X=ric.mX, mean_Y=ric.mY, mean_Z=ric.P[1:] * params.sigma)
        gen = lq_generator(params, mean_mode="analytic", analytic_means=means)
    else:
        if args.policy is None:
            raise InvalidArgumentError("provide a policy JSON file or --oracle")
        with open(args.policy) as fh:
            policy = DecoupledPolicy.from_dict(json.load(fh), c_g=params.c_g)
        grid = make_grid(params.T, policy.n_steps)
        dw = gen_increments(sample, grid)
        ensemble = rollout_ensemble(policy, dw, params, grid)
        gen = lq_generator(params)
    report = evaluate_estimator(ensemble, gen, grid)
    _emit(
        {
            "init_term": report.init_term,
            "terminal_term": report.terminal_term,
            "fwd_max": report.fwd_max,
            "bwd_max": report.bwd_max,
            "martingale_term": report.martingale_term,
            "total": report.total,
            "fwd_profile": report.fwd_profile.tolist(),
            "bwd_profile": report.bwd_profile.tolist(),
        },
        args.out,
    )
    print(
        f"estimator total {report.total:.6g} "
        f"(init {report.init_term:.3g}, terminal {report.terminal_term:.3g}, "
        f"fwd {report.fwd_max:.3g}, bwd {report.bwd_max:.3g}) "
        f"over {args.paths} paths",
        file=sys.stderr,
    )
    return 0


def _cmd_shoot(args) -> int:
    cfg = _load_config(args.config)
    params = _params_from_config(cfg)
    validate_lq(params)
    grid = make_grid(params.T, args.steps)
    result = solve_shooting(params, grid, n_paths=args.paths, seed=args.seed)
    _emit(
        {
            "y0": result.params.y0,
            "z": result.params.z.tolist(),
            "terminal_loss": result.terminal_loss,
            "regularized": result.regularized,
        },
        args.out,
    )
    print(
        f"terminal loss {result.terminal_loss:.6g} at y0={result.params.y0:.6g} "
        f"({args.paths} paths)",
        file=sys.stderr,
    )
    return 0


def _cmd_oracle(args) -> int:
    cfg = _load_config(args.config)
    params = _params_from_config(cfg)
    validate_lq(params)
    grid = make_grid(params.T, args.steps)
    ric = riccati_discrete(params, grid)
    lines = ["i,t,P,Q,mX"]
    for i in range(grid.N + 1):
        lines.append(
            f"{i},{float(grid.nodes[i])!r},{float(ric.P[i])!r},"
            f"{float(ric.Q[i])!r},{float(ric.mX[i])!r}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text, end="")
    dw = gen_increments(
        SampleConfig(seed=args.seed, paths=args.paths, antithetic=args.antithetic), grid
    )
    e = exact_discrete_solution(dw, ric, params, grid)
    mean_y = ric.mY
    fwd = e.X[:, 1:] - e.X[:, :-1] + e.Y[:, :-1] * grid.tau / params.c_alpha - params.sigma * e.dW
    bwd = (
        e.Y[:, 1:]
        - e.Y[:, :-1]
        + (params.c_x * e.X[:, :-1] + params.h_bar / params.c_alpha * mean_y[None, :-1])
        * grid.tau
        - e.Z * e.dW
    )
    scale = 1.0 + np.abs(e.X[:, :-1])
    max_res = max(np.abs(fwd / scale).max(), np.abs(bwd / scale).max())
    print(f"max relative recursion residual over {args.paths} paths: {max_res:.3e}", file=sys.stderr)
    return 0


def _cmd_schedule(args) -> int:
    entry = schedule(args.j, args.l)
    print(json.dumps({"j": entry.j, "l": entry.l, "N": entry.N, "K": entry.K, "Lambda": entry.Lambda}))
    return 0


def _cmd_study(args) -> int:
    cfg = _load_config(args.config)
    params = _params_from_config(cfg)
    validate_lq(params)
    cap = _DESK_CAP[args.l]
    if args.j_max > cap and not args.allow_large:
        raise InvalidArgumentError(
            f"j_max={args.j_max} exceeds the desk-scale cap {cap} for l={args.l}; "
            f"pass --allow-large to override"
        )
    picard_cfg = cfg.get("picard", {})
    basis_cfg = cfg.get("basis", {})
    rows = run_study(
        params,
        range(args.j_min, args.j_max + 1),
        l=args.l,
        P=args.picard,
        seed=args.seed,
        eval_paths=args.eval_paths,
        basis_domain=(float(basis_cfg.get("x_min", 0.0)), float(basis_cfg.get("x_max", 2.0))),
        crn=bool(picard_cfg.get("crn", False)),
        initial_y=picard_cfg.get("init"),
    )
    write_csv(rows, args.out)
    for r in rows:
        print(
            f"j={r.j} N={r.N} K={r.K} Lambda={r.Lambda}: "
            f"estimator={r.estimator_total:.6g} true={r.true_sq_error:.6g} "
            f"ratio={r.ratio:.3g} ({r.runtime_seconds:.2f}s)",
            file=sys.stderr,
        )
    try:
        print(f"fitted log-log slope: {fit_slope(rows):.3f}", file=sys.stderr)
    except InsufficientDataError:
        pass
    print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvfbsde",
        description="Solve a coupled mean-field forward-backward system and "
        "certify candidate solutions with an a posteriori error estimator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp, paths_default):
        sp.add_argument("--config", help="JSON file with model parameters")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--paths", type=int, default=paths_default)
        sp.add_argument("--out", help="output file (default: stdout)")

    sp = sub.add_parser("solve", help="run the hybrid solver, emit the policy as JSON")
    add_common(sp, None)
    sp.add_argument("--steps", type=int, required=True, help="time steps N")
    sp.add_argument("--bins", type=int, default=None, help="basis size K (default 12)")
    sp.add_argument("--picard", type=int, default=None, help="Picard iterations")
    sp.add_argument("--crn", action="store_true", help="reuse increments across iterations")
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("estimate", help="evaluate the error estimator of a policy")
    sp.add_argument("policy", nargs="?", help="policy JSON from `solve`")
    add_common(sp, 10_000)
    sp.add_argument("--oracle", action="store_true", help="estimate the exact discrete solution")
    sp.add_argument("--steps", type=int, default=32, help="time steps for --oracle")
    sp.add_argument("--antithetic", action="store_true")
    sp.set_defaults(func=_cmd_estimate)

    sp = sub.add_parser("shoot", help="terminal-loss shooting solver")
    add_common(sp, 10_000)
    sp.add_argument("--steps", type=int, default=32)
    sp.set_defaults(func=_cmd_shoot)

    sp = sub.add_parser("oracle", help="emit the discrete recursion sequences as CSV")
    add_common(sp, 1_000)
    sp.add_argument("--steps", type=int, default=32)
    sp.add_argument("--antithetic", action="store_true")
    sp.set_defaults(func=_cmd_oracle)

    sp = sub.add_parser("schedule", help="derive (N, K, Lambda) for a study level")
    sp.add_argument("--j", type=int, required=True)
    sp.add_argument("--l", type=int, required=True)
    sp.set_defaults(func=_cmd_schedule)

    sp = sub.add_parser("study", help="convergence study over a range of levels")
    sp.add_argument("--config", help="JSON file with model parameters")
    sp.add_argument("--l", type=int, choices=(3, 4, 5), default=4)
    sp.add_argument("--j-min", type=int, default=2)
    sp.add_argument("--j-max", type=int, default=9)
    sp.add_argument("--picard", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--eval-paths", type=int, default=10_000)
    sp.add_argument("--out", required=True, help="CSV output file")
    sp.add_argument("--allow-large", action="store_true", help="override the desk-scale cap")
    sp.set_defaults(func=_cmd_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MonotonicityError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 3
    except (InvalidArgumentError, InsufficientDataError, StepSizeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
