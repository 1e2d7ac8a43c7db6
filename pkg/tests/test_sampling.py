import numpy as np
import pytest

from mvfbsde import InvalidArgumentError, SampleConfig, gen_increments, make_grid


def test_determinism():
    g = make_grid(1.0, 16)
    cfg = SampleConfig(seed=42, paths=200)
    first = gen_increments(cfg, g)
    second = gen_increments(cfg, g)
    assert np.array_equal(first, second)


def test_seed_changes_output():
    g = make_grid(1.0, 8)
    a = gen_increments(SampleConfig(seed=1, paths=64), g)
    b = gen_increments(SampleConfig(seed=2, paths=64), g)
    assert not np.array_equal(a, b)


def test_path_content_independent_of_total_count():
    # adding paths to a study must not perturb existing ones
    g = make_grid(1.0, 8)
    small = gen_increments(SampleConfig(seed=7, paths=10), g)
    large = gen_increments(SampleConfig(seed=7, paths=5000), g)
    assert np.array_equal(small, large[:10])


def test_moments():
    # empirical mean within 4 standard errors of 0 and variance within
    # 5% of tau, per column
    g = make_grid(1.0, 8)
    n = 100_000
    dw = gen_increments(SampleConfig(seed=123, paths=n), g)
    tau = g.tau
    assert np.all(np.abs(dw.mean(axis=0)) <= 4.0 * np.sqrt(tau / n))
    assert np.all(np.abs(dw.var(axis=0) - tau) <= 0.05 * tau)


def test_antithetic_pairs():
    g = make_grid(1.0, 4)
    dw = gen_increments(SampleConfig(seed=5, paths=2, antithetic=True), g)
    assert np.array_equal(dw[1], -dw[0])
    many = gen_increments(SampleConfig(seed=5, paths=64, antithetic=True), g)
    assert np.array_equal(many[1::2], -many[0::2])
    assert np.array_equal(many[0], dw[0])


def test_antithetic_needs_even_count():
    with pytest.raises(InvalidArgumentError):
        SampleConfig(seed=0, paths=3, antithetic=True)


def test_path_count_positive():
    with pytest.raises(InvalidArgumentError):
        SampleConfig(seed=0, paths=0)


def test_variance_scales_with_tau():
    coarse = gen_increments(SampleConfig(seed=9, paths=50_000), make_grid(1.0, 4))
    fine = gen_increments(SampleConfig(seed=9, paths=50_000), make_grid(1.0, 16))
    assert coarse.var() == pytest.approx(0.25, rel=0.05)
    assert fine.var() == pytest.approx(0.0625, rel=0.05)
