import numpy as np
import pytest

from mvfbsde import (
    BasisSpec,
    ClosedForm,
    DecoupledPolicy,
    DivergenceError,
    InvalidArgumentError,
    LQParams,
    PicardConfig,
    SampleConfig,
    backward_pass,
    derive_seed,
    evaluate_policy,
    exact_triple_on_paths,
    fit_weights,
    forward_rollout,
    gen_increments,
    make_grid,
    picard_solve,
    rollout_ensemble,
)


@pytest.fixture
def basis():
    return BasisSpec(x_min=0.0, x_max=2.0, K=5)


class TestForwardRollout:
    def test_no_drift_no_noise(self):
        p = LQParams(x0=1.5, T=1, c_alpha=1, sigma=0.0, c_x=1, h_bar=0, c_g=0.3)
        g = make_grid(1.0, 8)
        X = forward_rollout(lambda i, x: np.zeros_like(x), np.zeros((3, 8)), p, g)
        assert np.all(X == 1.5)

    def test_constant_field_linear_decay(self):
        p = LQParams(x0=1.0, T=1, c_alpha=2.0, sigma=0.0, c_x=1, h_bar=0, c_g=0.3)
        g = make_grid(1.0, 4)
        c = 0.8
        X = forward_rollout(lambda i, x: np.full_like(x, c), np.zeros((2, 4)), p, g)
        assert X[0] == pytest.approx(p.x0 - (c / p.c_alpha) * g.nodes, rel=1e-14)

    def test_exact_field_matches_reference_paths(self, paper_params):
        g = make_grid(1.0, 16)
        dw = gen_increments(SampleConfig(seed=20, paths=200), g)
        cf = ClosedForm(paper_params, g.tau / 50)
        eta = cf.eta(g.nodes)
        xi = np.asarray(cf.xi(g.nodes))
        X = forward_rollout(lambda i, x: eta[i] * x + xi[i], dw, paper_params, g)
        ref = exact_triple_on_paths(dw, paper_params, g)
        assert X == pytest.approx(ref.X, rel=1e-12)

    def test_divergence_names_step_and_path(self, paper_params):
        g = make_grid(1.0, 4)
        dw = np.zeros((2, 4))
        with np.errstate(over="ignore"), pytest.raises(DivergenceError, match="step"):
            forward_rollout(lambda i, x: x * 1e308, dw, paper_params, g)

    def test_increment_shape_check(self, paper_params):
        with pytest.raises(InvalidArgumentError):
            forward_rollout(lambda i, x: x, np.zeros((2, 5)), paper_params, make_grid(1.0, 4))


class TestBackwardPass:
    def test_zero_data_gives_zero_weights(self, basis):
        p = LQParams(x0=1, T=1, c_alpha=1, sigma=0.5, c_x=0, h_bar=0, c_g=0)
        g = make_grid(1.0, 4)
        dw = gen_increments(SampleConfig(seed=21, paths=100), g)
        X = forward_rollout(lambda i, x: np.zeros_like(x), dw, p, g)
        policy = backward_pass(X, dw, p, g, basis)
        assert np.all(policy.alpha == 0.0) and np.all(policy.beta == 0.0)

    def test_degenerate_volatility_kills_z(self, basis):
        # sigma = 0 folds the increments to zero, so the z-targets vanish
        p = LQParams(x0=1, T=1, c_alpha=1, sigma=0.0, c_x=1, h_bar=1, c_g=0.3)
        g = make_grid(1.0, 4)
        dw = np.zeros((1, 4))
        X = forward_rollout(lambda i, x: 0.1 * x, dw, p, g)
        policy = backward_pass(X, dw, p, g, basis)
        assert np.all(policy.beta == 0.0)

    def test_single_backward_step_by_hand(self, paper_params):
        basis = BasisSpec(x_min=0.0, x_max=2.0, K=3)
        g = make_grid(1.0, 1)
        dw = np.array([[0.4]])
        X = np.array([[1.0, 1.3]])
        policy = backward_pass(X, dw, paper_params, g, basis)
        p = paper_params
        y_next = p.c_g * 1.3
        beta_target = 0.4 / 1.0 * y_next
        alpha_target = y_next + 1.0 * (p.c_x * 1.0 + p.h_bar / p.c_alpha * y_next)
        # the single sample sits in the one interior bin
        assert policy.beta[0] == pytest.approx([0.0, beta_target, 0.0])
        assert policy.alpha[0] == pytest.approx([0.0, alpha_target, 0.0])

    def test_uses_updated_field_at_next_step(self, paper_params, basis):
        # the step-i targets must read the refit field at i+1, not the stale one
        g = make_grid(1.0, 2)
        dw = gen_increments(SampleConfig(seed=22, paths=300), g)
        X = forward_rollout(lambda i, x: np.full_like(x, 0.3), dw, paper_params, g)
        policy = backward_pass(X, dw, paper_params, g, basis)
        p = paper_params
        y1 = evaluate_policy(policy.alpha[1], X[:, 1], basis)
        expected = fit_weights(
            X[:, 0],
            y1 + g.tau * (p.c_x * X[:, 0] + p.h_bar / p.c_alpha * y1.mean()),
            basis,
        )
        assert policy.alpha[0] == pytest.approx(expected, rel=1e-14)

    def test_shape_check(self, paper_params, basis):
        with pytest.raises(InvalidArgumentError):
            backward_pass(np.zeros((5, 4)), np.zeros((5, 4)), paper_params, make_grid(1.0, 4), basis)


class TestPicardSolve:
    def test_single_iteration_unrolls(self, paper_params, basis):
        g = make_grid(1.0, 4)
        cfg = PicardConfig(P=1, lambda_reg=200)
        policy, ensemble = picard_solve(paper_params, g, basis, cfg, seed=30)

        dw1 = gen_increments(SampleConfig(seed=derive_seed(30, 1), paths=200), g)
        init = np.full((g.N, basis.K), 1.0 / basis.K)
        start = DecoupledPolicy(alpha=init, beta=np.zeros_like(init), basis=basis, c_g=paper_params.c_g)
        X = forward_rollout(start.y_at, dw1, paper_params, g)
        expected = backward_pass(X, dw1, paper_params, g, basis)
        assert np.array_equal(policy.alpha, expected.alpha)
        assert np.array_equal(policy.beta, expected.beta)

        dw2 = gen_increments(SampleConfig(seed=derive_seed(30, 2), paths=200), g)
        assert np.array_equal(ensemble.dW, dw2)

    def test_final_ensemble_is_rollout_consistent(self, paper_params, basis):
        g = make_grid(1.0, 8)
        policy, e = picard_solve(paper_params, g, basis, PicardConfig(P=3, lambda_reg=500), seed=31)
        for i in range(g.N):
            assert np.array_equal(e.Y[:, i], evaluate_policy(policy.alpha[i], e.X[:, i], basis))
            assert np.array_equal(e.Z[:, i], evaluate_policy(policy.beta[i], e.X[:, i], basis))
        assert np.array_equal(e.Y[:, -1], paper_params.c_g * e.X[:, -1])

    def test_rollout_exactness(self, paper_params, basis):
        g = make_grid(1.0, 8)
        policy, e = picard_solve(paper_params, g, basis, PicardConfig(P=2, lambda_reg=300), seed=32)
        p = paper_params
        recomputed = e.X[:, :-1] - e.Y[:, :-1] * g.tau / p.c_alpha + p.sigma * e.dW
        assert np.array_equal(e.X[:, 1:], recomputed)

    def test_determinism(self, paper_params, basis):
        g = make_grid(1.0, 4)
        cfg = PicardConfig(P=2, lambda_reg=200)
        a, _ = picard_solve(paper_params, g, basis, cfg, seed=33)
        b, _ = picard_solve(paper_params, g, basis, cfg, seed=33)
        assert np.array_equal(a.alpha, b.alpha) and np.array_equal(a.beta, b.beta)

    def test_crn_reuses_increments(self, paper_params, basis):
        g = make_grid(1.0, 4)
        cfg = PicardConfig(P=3, lambda_reg=100, crn=True)
        _, e = picard_solve(paper_params, g, basis, cfg, seed=34)
        shared = gen_increments(SampleConfig(seed=derive_seed(34, 0), paths=100), g)
        assert np.array_equal(e.dW, shared)

    def test_initial_guess_override(self, paper_params, basis):
        g = make_grid(1.0, 2)
        cfg = PicardConfig(P=1, lambda_reg=50, initial_y=0.0)
        dw1 = gen_increments(SampleConfig(seed=derive_seed(35, 1), paths=50), g)
        policy, _ = picard_solve(paper_params, g, basis, cfg, seed=35)
        X = forward_rollout(lambda i, x: np.zeros_like(x), dw1, paper_params, g)
        expected = backward_pass(X, dw1, paper_params, g, basis)
        assert np.array_equal(policy.alpha, expected.alpha)

    def test_config_validation(self):
        with pytest.raises(InvalidArgumentError):
            PicardConfig(P=0, lambda_reg=10)
        with pytest.raises(InvalidArgumentError):
            PicardConfig(P=1, lambda_reg=0)


class TestPolicy:
    def test_json_roundtrip(self, paper_params, basis):
        g = make_grid(1.0, 4)
        policy, _ = picard_solve(paper_params, g, basis, PicardConfig(P=1, lambda_reg=100), seed=36)
        clone = DecoupledPolicy.from_dict(policy.to_dict(), c_g=paper_params.c_g)
        assert np.array_equal(clone.alpha, policy.alpha)
        assert np.array_equal(clone.beta, policy.beta)
        assert clone.basis == policy.basis

    def test_terminal_rule(self, paper_params, basis):
        policy = DecoupledPolicy(
            alpha=np.zeros((2, basis.K)), beta=np.zeros((2, basis.K)),
            basis=basis, c_g=paper_params.c_g,
        )
        x = np.array([0.5, 2.5])
        assert np.array_equal(policy.y_at(2, x), paper_params.c_g * x)

    def test_rejects_nonfinite_weights(self, basis):
        with pytest.raises(InvalidArgumentError):
            DecoupledPolicy(
                alpha=np.full((2, basis.K), np.inf), beta=np.zeros((2, basis.K)),
                basis=basis, c_g=0.3,
            )

    def test_rollout_ensemble_shares_increments(self, paper_params, basis):
        g = make_grid(1.0, 4)
        policy, _ = picard_solve(paper_params, g, basis, PicardConfig(P=1, lambda_reg=64), seed=37)
        dw = gen_increments(SampleConfig(seed=99, paths=32), g)
        e = rollout_ensemble(policy, dw, paper_params, g)
        assert e.dW is dw
        assert e.n_paths == 32
