"""Model construction, densities, and trajectory simulation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticefilter import build_paper_model, simulate_trajectory
from latticefilter.errors import InvalidDimensionError, NumericError
from latticefilter.model import (
    ModelSpec,
    forward_density,
    forward_log_density,
    log_likelihood_matrix,
    obs_likelihood,
    observe_sample,
    progress_mean,
    progress_sample,
    sample_initial,
)

# Frozen scalar constants (standard normal density values).
INV_SQRT_2PI = 0.3989422804014327
EXP_HALF_OVER_SQRT_2PI = 0.24197072451914337
INV_SQRT_2PI_016 = 0.9973557010035817


@pytest.fixture
def paper6():
    return build_paper_model(6)


def test_paper_band_coefficients(paper6):
    P = paper6.transition_matrix()
    assert P.shape == (6, 6)
    assert np.allclose(np.diag(P), 0.35)
    assert np.allclose(np.diag(P, -1), 0.4)
    assert np.allclose(np.diag(P, 1), 0.05)
    assert np.count_nonzero(P) == 6 + 5 + 5


def test_paper_variance_patterns(paper6):
    assert paper6.novelty_var.tolist() == [1.0, 0.25, 1.0, 0.25, 1.0, 0.25]
    assert paper6.obs_var.tolist() == [0.16, 1.0, 1.0, 1.0, 0.16, 1.0]
    assert paper6.init_mean == 0.0
    assert paper6.init_var == 5.0


def test_paper_stride_override():
    m = build_paper_model(7, stride=3)
    assert m.obs_var.tolist() == [0.16, 1.0, 1.0, 0.16, 1.0, 1.0, 0.16]


def test_modelspec_validation():
    with pytest.raises(InvalidDimensionError):
        build_paper_model(1)
    with pytest.raises(InvalidDimensionError):
        ModelSpec(2, 0.4, 0.35, 0.05, novelty_var=(1.0,), obs_var=(1.0, 1.0))
    with pytest.raises(InvalidDimensionError):
        ModelSpec(2, 0.4, 0.35, 0.05, novelty_var=(1.0, -1.0), obs_var=(1.0, 1.0))
    with pytest.raises(InvalidDimensionError):
        # |a| + |b| + |c| >= 1 is unstable.
        ModelSpec(2, 0.5, 0.45, 0.05, novelty_var=(1.0, 1.0), obs_var=(1.0, 1.0))


def test_progress_mean_band_truncation(paper6):
    x = np.zeros(6)
    x[0] = 1.0
    out = progress_mean(x, paper6)
    # locus 0 sees only its own value (no left neighbor), locus 1 the sub term
    assert out[0] == pytest.approx(0.35)
    assert out[1] == pytest.approx(0.4)
    assert np.all(out[2:] == 0.0)
    x = np.zeros(6)
    x[5] = 1.0
    out = progress_mean(x, paper6)
    assert out[5] == pytest.approx(0.35)
    assert out[4] == pytest.approx(0.05)


def test_progress_mean_matches_matrix(paper6):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(6)
    assert np.allclose(progress_mean(x, paper6), paper6.transition_matrix() @ x)


def test_progress_mean_batched(paper6):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((4, 6))
    out = progress_mean(X, paper6)
    assert out.shape == (4, 6)
    for k in range(4):
        assert np.allclose(out[k], progress_mean(X[k], paper6))


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_progress_mean_linearity(seed):
    m = build_paper_model(5)
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 5))
    a, b = rng.uniform(-3, 3, size=2)
    lhs = progress_mean(a * x + b * y, m)
    rhs = a * progress_mean(x, m) + b * progress_mean(y, m)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_forward_density_frozen_values(paper6):
    # Candidate equal to its conditional mean, unit novelty variance.
    x = np.zeros(6)
    assert forward_density(x, 0.0, 0, paper6) == pytest.approx(INV_SQRT_2PI, rel=1e-12)
    # One standard deviation away.
    assert forward_density(x, 1.0, 0, paper6) == pytest.approx(
        EXP_HALF_OVER_SQRT_2PI, rel=1e-12
    )
    assert forward_log_density(x, 0.0, 0, paper6) == pytest.approx(
        np.log(INV_SQRT_2PI), rel=1e-12
    )


def test_obs_likelihood_frozen_values(paper6):
    # Low-variance locus 0: peak density 1/sqrt(2*pi*0.16).
    assert obs_likelihood(0.0, 0.0, 0, paper6) == pytest.approx(
        INV_SQRT_2PI_016, rel=1e-12
    )
    assert obs_likelihood(0.0, 0.0, 1, paper6) == pytest.approx(INV_SQRT_2PI, rel=1e-12)


def test_density_normalization_quadrature(paper6):
    """forward_density and obs_likelihood integrate to 1 over +-8 sd."""
    x = np.full(6, 0.7)
    for locus in (0, 1):
        sd = np.sqrt(paper6.novelty_var[locus])
        mu = progress_mean(x, paper6)[locus]
        grid = np.linspace(mu - 8 * sd, mu + 8 * sd, 4001)
        vals = [forward_density(x, z, locus, paper6) for z in grid]
        assert np.trapezoid(vals, grid) == pytest.approx(1.0, rel=1e-6)
        sd_o = np.sqrt(paper6.obs_var[locus])
        grid = np.linspace(-8 * sd_o, 8 * sd_o, 4001)
        vals = [obs_likelihood(y, 0.0, locus, paper6) for y in grid]
        assert np.trapezoid(vals, grid) == pytest.approx(1.0, rel=1e-6)


def test_log_likelihood_matrix_matches_scalar(paper6):
    rng = np.random.default_rng(2)
    Z = rng.standard_normal((3, 6))
    y = rng.standard_normal(6)
    out = log_likelihood_matrix(y, Z, paper6)
    for i in range(3):
        for l in range(6):
            expect = np.log(obs_likelihood(y[l], Z[i, l], l, paper6))
            assert out[i, l] == pytest.approx(expect, rel=1e-12)


def test_log_likelihood_matrix_rejects_nonfinite(paper6):
    Z = np.zeros((2, 6))
    y = np.zeros(6)
    y[3] = np.inf
    with pytest.raises(NumericError):
        log_likelihood_matrix(y, Z, paper6)


def test_sample_initial_moments(paper6):
    rng = np.random.default_rng(3)
    e = sample_initial(paper6, rng, size=200000)
    assert e.shape == (200000, 6)
    assert np.allclose(e.mean(axis=0), 0.0, atol=0.03)
    assert np.allclose(e.var(axis=0), 5.0, rtol=0.03)


def test_progress_sample_moments(paper6):
    rng = np.random.default_rng(4)
    x = np.ones(6)
    draws = progress_sample(np.tile(x, (200000, 1)), paper6, rng)
    assert np.allclose(draws.mean(axis=0), progress_mean(x, paper6), atol=0.02)
    assert np.allclose(draws.var(axis=0), paper6.novelty_var, rtol=0.03)


def test_observe_sample_moments(paper6):
    rng = np.random.default_rng(5)
    z = np.zeros(6)
    draws = observe_sample(np.tile(z, (200000, 1)), paper6, rng)
    assert np.allclose(draws.var(axis=0), paper6.obs_var, rtol=0.03)


def test_simulate_trajectory_shapes(paper6):
    rng = np.random.default_rng(6)
    states, obs = simulate_trajectory(paper6, 1, rng)
    assert states.shape == (1, 6)
    assert obs.shape == (1, 6)


def test_simulate_trajectory_deterministic(paper6):
    s1, o1 = simulate_trajectory(paper6, 10, np.random.default_rng(42))
    s2, o2 = simulate_trajectory(paper6, 10, np.random.default_rng(42))
    assert np.array_equal(s1, s2)
    assert np.array_equal(o1, o2)


def test_trajectory_variance_bounded(paper6):
    """|a|+|b|+|c| < 1 keeps the marginal variance bounded over 200 steps.

    Oracle: iterate the exact covariance recursion C -> P C P' + N and
    compare the trajectory's empirical spread against its fixed point.
    """
    P = paper6.transition_matrix()
    C = np.eye(6) * 5.0
    for _ in range(500):
        C = P @ C @ P.T + np.diag(paper6.novelty_var)
    stationary_cap = np.diag(C).max()
    assert stationary_cap < 5.0  # the dynamics are contracting

    rng = np.random.default_rng(7)
    states, _ = simulate_trajectory(paper6, 200, rng)
    # Bound the late-time sample variance by a generous multiple of the
    # stationary value; divergence would overshoot by orders of magnitude.
    late = states[50:]
    assert late.var(axis=0).max() < 6.0 * stationary_cap
