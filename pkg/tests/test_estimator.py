import numpy as np
import pytest

from mvfbsde import (
    BasisSpec,
    Ensemble,
    InvalidArgumentError,
    MeasureSummary,
    PicardConfig,
    SampleConfig,
    estimator_vs_error_ratio,
    evaluate_estimator,
    exact_discrete_solution,
    gen_increments,
    lq_generator,
    make_grid,
    picard_solve,
    riccati_discrete,
    solve_shooting,
    shoot_rollout,
    make_grid as _mg,
)


def analytic_generator(p, r):
    means = MeasureSummary(mean_X=r.mX, mean_Y=r.mY, mean_Z=r.P[1:] * p.sigma)
    return lq_generator(p, mean_mode="analytic", analytic_means=means)


def exact_ensemble(p, N, paths, seed):
    g = make_grid(p.T, N)
    r = riccati_discrete(p, g)
    dw = gen_increments(SampleConfig(seed=seed, paths=paths), g)
    return g, r, exact_discrete_solution(dw, r, p, g)


class TestZeroOnExact:
    def test_exact_solution_has_tiny_estimator(self, paper_params):
        g, r, e = exact_ensemble(paper_params, 16, 2000, seed=10)
        report = evaluate_estimator(e, analytic_generator(paper_params, r), g)
        scale = 1.0 + float(np.max(np.abs(e.X)) ** 2)
        assert report.total <= 1e-10 * scale

    def test_report_structure(self, paper_params):
        g, r, e = exact_ensemble(paper_params, 8, 500, seed=10)
        report = evaluate_estimator(e, analytic_generator(paper_params, r), g)
        assert report.total == (
            report.init_term + report.terminal_term + report.fwd_max + report.bwd_max
        )
        assert report.martingale_term == 0.0
        assert report.fwd_max == report.fwd_profile.max()
        assert report.bwd_max == report.bwd_profile.max()
        assert len(report.fwd_profile) == g.N


class TestSolverIdentities:
    def test_picard_ensemble_reduces_to_backward_term(self, paper_params):
        # rollout-consistent candidates leave only the backward residual
        g = make_grid(1.0, 8)
        basis = BasisSpec(0.0, 2.0, 5)
        _, e = picard_solve(paper_params, g, basis, PicardConfig(P=2, lambda_reg=400), seed=3)
        report = evaluate_estimator(e, lq_generator(paper_params), g)
        assert report.init_term == 0.0
        assert report.fwd_max <= 1e-20
        assert report.terminal_term <= 1e-20
        assert report.total == pytest.approx(report.bwd_max, abs=1e-20)

    def test_shooting_ensemble_reduces_to_terminal_term(self, paper_params):
        g = make_grid(1.0, 8)
        result = solve_shooting(paper_params, g, n_paths=500, seed=4)
        dw = gen_increments(SampleConfig(seed=5, paths=500), g)
        e = shoot_rollout(result.params, dw, paper_params, g)
        report = evaluate_estimator(e, lq_generator(paper_params), g)
        assert report.init_term == 0.0
        assert report.fwd_max <= 1e-20
        assert report.bwd_max <= 1e-20
        assert report.total == pytest.approx(report.terminal_term, abs=1e-20)


class TestPerturbationScaling:
    def test_quadratic_in_epsilon(self, paper_params):
        # linear generator: residuals are proportional to the perturbation size
        g, r, e = exact_ensemble(paper_params, 16, 10_000, seed=11)
        gen = analytic_generator(paper_params, r)
        shape = np.sin(2.0 * g.nodes)[None, :] + 0.5
        for eps in (0.1, 0.05):
            totals = []
            for scale in (eps, eps / 2.0):
                perturbed = Ensemble(X=e.X, Y=e.Y + scale * shape, Z=e.Z, dW=e.dW, grid=g)
                totals.append(evaluate_estimator(perturbed, gen, g).total)
            assert 3.5 <= totals[0] / totals[1] <= 4.5


class TestRatio:
    def test_benchmark_values(self):
        report = _report(total=0.0586)
        assert estimator_vs_error_ratio(report, 0.0822) == pytest.approx(0.713, abs=1e-3)
        assert estimator_vs_error_ratio(_report(0.0427), 0.0734) == pytest.approx(0.582, abs=1e-3)

    def test_equal_inputs(self):
        assert estimator_vs_error_ratio(_report(0.5), 0.5) == 1.0

    def test_nonpositive_denominator(self):
        with pytest.raises(InvalidArgumentError):
            estimator_vs_error_ratio(_report(1.0), 0.0)
        with pytest.raises(InvalidArgumentError):
            estimator_vs_error_ratio(_report(1.0), -2.0)


class TestValidation:
    def test_grid_mismatch(self, paper_params):
        g, r, e = exact_ensemble(paper_params, 8, 50, seed=12)
        with pytest.raises(InvalidArgumentError):
            evaluate_estimator(e, analytic_generator(paper_params, r), _mg(1.0, 16))

    def test_analytic_mode_needs_means(self, paper_params):
        with pytest.raises(InvalidArgumentError):
            lq_generator(paper_params, mean_mode="analytic")

    def test_analytic_means_must_match_grid(self, paper_params):
        g, r, e = exact_ensemble(paper_params, 8, 50, seed=12)
        r16 = riccati_discrete(paper_params, _mg(1.0, 16))
        with pytest.raises(InvalidArgumentError):
            evaluate_estimator(e, analytic_generator(paper_params, r16), g)


def _report(total):
    from mvfbsde import EstimatorReport

    return EstimatorReport(
        init_term=0.0,
        terminal_term=0.0,
        fwd_max=0.0,
        bwd_max=total,
        total=total,
        fwd_profile=np.zeros(1),
        bwd_profile=np.full(1, total),
    )
