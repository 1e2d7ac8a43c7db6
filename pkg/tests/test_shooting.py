import numpy as np
import pytest

from mvfbsde import (
    ClosedForm,
    DivergenceError,
    InvalidArgumentError,
    LQParams,
    SampleConfig,
    ShootingParams,
    gen_increments,
    make_grid,
    shoot_rollout,
    solve_shooting,
)


def exact_theta(p, grid):
    cf = ClosedForm(p, grid.tau / 50)
    y0 = float(cf.eta(0.0)) * p.x0 + float(cf.xi(0.0))
    return ShootingParams(y0=y0, z=p.sigma * np.asarray(cf.eta(grid.nodes[:-1])))


def terminal_loss(theta, dw, p, grid):
    e = shoot_rollout(theta, dw, p, grid)
    return float(np.mean((e.Y[:, -1] - p.c_g * e.X[:, -1]) ** 2))


class TestShootRollout:
    def test_all_zero(self):
        p = LQParams(x0=1.0, T=1, c_alpha=1, sigma=0.0, c_x=0, h_bar=0, c_g=0.3)
        g = make_grid(1.0, 4)
        theta = ShootingParams(y0=0.0, z=np.zeros(4))
        e = shoot_rollout(theta, np.zeros((2, 4)), p, g)
        assert np.all(e.X == 1.0) and np.all(e.Y == 0.0)

    def test_exact_parameters_loss_decreases_with_n(self, paper_params):
        losses = []
        for N in (8, 16, 32):
            g = make_grid(1.0, N)
            dw = gen_increments(SampleConfig(seed=40, paths=4000), g)
            losses.append(terminal_loss(exact_theta(paper_params, g), dw, paper_params, g))
        assert losses[0] > losses[1] > losses[2]

    def test_affine_in_parameters(self, paper_params):
        g = make_grid(1.0, 8)
        dw = gen_increments(SampleConfig(seed=41, paths=100), g)
        rng = np.random.default_rng(0)
        v1, v2 = rng.normal(size=9), rng.normal(size=9)
        e1 = shoot_rollout(ShootingParams.from_vector(v1), dw, paper_params, g)
        e2 = shoot_rollout(ShootingParams.from_vector(v2), dw, paper_params, g)
        mid = shoot_rollout(ShootingParams.from_vector((v1 + v2) / 2), dw, paper_params, g)
        assert np.max(np.abs(e1.X + e2.X - 2 * mid.X)) <= 1e-10
        assert np.max(np.abs(e1.Y + e2.Y - 2 * mid.Y)) <= 1e-10

    def test_y_terminal_left_as_rolled(self, paper_params):
        # no terminal overwrite: Y_N generally differs from c_g X_N
        g = make_grid(1.0, 4)
        dw = gen_increments(SampleConfig(seed=42, paths=10), g)
        e = shoot_rollout(ShootingParams(y0=5.0, z=np.zeros(4)), dw, paper_params, g)
        assert not np.allclose(e.Y[:, -1], paper_params.c_g * e.X[:, -1])

    def test_shape_check(self, paper_params):
        with pytest.raises(InvalidArgumentError):
            shoot_rollout(ShootingParams(0.0, np.zeros(3)), np.zeros((2, 4)), paper_params, make_grid(1.0, 4))

    def test_nonfinite_params_rejected(self):
        with pytest.raises(InvalidArgumentError):
            ShootingParams(y0=np.nan, z=np.zeros(2))


class TestSolveShooting:
    def test_beats_exact_theta_projection(self, paper_params):
        g = make_grid(1.0, 16)
        result = solve_shooting(paper_params, g, n_paths=2000, seed=43)
        dw = gen_increments(SampleConfig(seed=43, paths=2000), g)
        assert result.terminal_loss <= terminal_loss(exact_theta(paper_params, g), dw, paper_params, g)
        assert not result.regularized

    def test_beats_random_candidates(self, paper_params):
        g = make_grid(1.0, 8)
        result = solve_shooting(paper_params, g, n_paths=1000, seed=44)
        dw = gen_increments(SampleConfig(seed=44, paths=1000), g)
        rng = np.random.default_rng(1)
        for _ in range(100):
            theta = ShootingParams.from_vector(rng.normal(scale=2.0, size=9))
            assert result.terminal_loss <= terminal_loss(theta, dw, paper_params, g) + 1e-18

    def test_loss_is_parabola_along_lines(self, paper_params):
        # three-point quadratic fit must reproduce a fourth point
        g = make_grid(1.0, 8)
        dw = gen_increments(SampleConfig(seed=45, paths=500), g)
        rng = np.random.default_rng(2)
        base, direction = rng.normal(size=9), rng.normal(size=9)
        s = np.array([-1.0, 0.0, 1.0, 2.5])
        vals = [
            terminal_loss(ShootingParams.from_vector(base + si * direction), dw, paper_params, g)
            for si in s
        ]
        coeffs = np.polyfit(s[:3], vals[:3], 2)
        assert np.polyval(coeffs, s[3]) == pytest.approx(vals[3], rel=1e-8)

    def test_recovers_initial_value(self, paper_params):
        g = make_grid(1.0, 32)
        result = solve_shooting(paper_params, g, n_paths=100_000, seed=46)
        expected = exact_theta(paper_params, g).y0
        assert abs(result.params.y0 - expected) / expected <= 0.05

    def test_underdetermined_sample_regularizes(self, paper_params):
        g = make_grid(1.0, 4)
        result = solve_shooting(paper_params, g, n_paths=1, seed=47)
        assert result.regularized
        assert np.isfinite(result.terminal_loss)
