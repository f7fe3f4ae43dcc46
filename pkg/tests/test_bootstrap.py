"""Bootstrap particle filter behavior."""

import numpy as np
import pytest

from latticefilter import bootstrap_filter, bootstrap_step, build_paper_model, kalman_filter
from latticefilter.model import simulate_trajectory


@pytest.fixture
def small():
    m = build_paper_model(4)
    rng = np.random.default_rng(0)
    _, obs = simulate_trajectory(m, 3, rng)
    return m, obs


def test_step_shapes_and_stats(small):
    m, obs = small
    rng = np.random.default_rng(1)
    prior = np.zeros((50, 4))
    out, stats = bootstrap_step(prior, obs[0], m, rng)
    assert out.shape == (50, 4)
    assert 0 < stats.max_weight <= 1
    assert 1 <= stats.ess <= 50


def test_filter_length_and_determinism(small):
    m, obs = small
    runs = [bootstrap_filter(obs, m, 30, np.random.default_rng(5)) for _ in range(2)]
    assert len(runs[0]) == 3
    for (e1, s1), (e2, s2) in zip(*runs):
        assert np.array_equal(e1, e2)
        assert s1 == s2


def test_resampled_values_come_from_progressed_support(small):
    """Every output row must be one of the progressed particles."""
    m, obs = small
    rng = np.random.default_rng(3)
    prior = np.zeros((20, 4))
    rng_copy = np.random.default_rng(3)
    from latticefilter.model import progress_sample

    progressed = progress_sample(prior, m, rng_copy)
    out, _ = bootstrap_step(prior, obs[0], m, rng)
    rows = {tuple(row) for row in progressed}
    for row in out:
        assert tuple(row) in rows


def test_tracks_kalman_mean_low_dim():
    """With few loci and many particles the bootstrap filter is accurate;
    the oracle is the exact Kalman mean."""
    m = build_paper_model(3)
    rng = np.random.default_rng(8)
    _, obs = simulate_trajectory(m, 5, rng)
    beliefs = kalman_filter(obs, m)[1:]
    steps = bootstrap_filter(obs, m, 40000, np.random.default_rng(9))
    for (ensemble, _), belief in zip(steps, beliefs):
        assert np.allclose(ensemble.mean(axis=0), belief.mean, atol=0.08)


def test_degeneracy_grows_with_dimension():
    """Max weight climbs towards 1 as the lattice widens at fixed M."""
    rng = np.random.default_rng(10)
    max_weights = {}
    for L in (4, 30):
        m = build_paper_model(L)
        _, obs = simulate_trajectory(m, 5, np.random.default_rng(11))
        steps = bootstrap_filter(obs, m, 500, np.random.default_rng(12))
        max_weights[L] = np.median([s.max_weight for _, s in steps])
    assert max_weights[30] > max_weights[4]
    assert max_weights[30] > 0.5
