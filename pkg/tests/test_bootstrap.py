import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from mdpols import AlphaPrior, alpha_posterior, bootstrap_functional, draw_weights
from mdpols.bootstrap import (
    edf_event_draws,
    edf_event_moments,
    sample_weights,
    sampling_probabilities,
)
from mdpols.moments import conditional_moments

from conftest import hetero_data, ridge_design


def test_weights_sum_to_total(small_design):
    W = draw_weights(small_design, 1.7, 500, seed=0)
    assert W.shape == (500, small_design.size)
    assert_allclose(W.sum(axis=1), small_design.n + 1.7 + 1.0, rtol=1e-13)


def test_per_row_mode_probabilities_renormalized(small_design):
    p = sampling_probabilities(small_design.with_mass_mode("per_row"), 2.0)
    assert_allclose(p.sum(), 1.0, rtol=1e-15)


def test_fractional_alpha_covariance_factor(small_design):
    # mean is exact; covariance carries the factor (n + alpha + 1) / (n + ceil(alpha) + 1)
    alpha = 0.5
    W = draw_weights(small_design, alpha, 100_000, seed=11)
    m = conditional_moments(small_design, alpha)
    n = small_design.n
    factor = (n + alpha + 1) / (n + 1 + 1)
    se = W.std(axis=0, ddof=1) / np.sqrt(W.shape[0])
    assert np.all(np.abs(W.mean(axis=0) - m.mean) < 4 * se)
    emp = np.diag(np.cov(W, rowvar=False))
    assert_allclose(emp, factor * np.diag(m.cov), rtol=0.05)


def test_seed_determinism(small_design):
    a = bootstrap_functional(small_design, 1.0, 5000, seed=123)
    b = bootstrap_functional(small_design, 1.0, 5000, seed=123)
    c = bootstrap_functional(small_design, 1.0, 5000, seed=124)
    assert_array_equal(a.betas, b.betas)
    assert not np.array_equal(a.betas, c.betas)


def test_chunk_prefix_stable(small_design):
    # the first chunk does not depend on how many replicates follow
    a = draw_weights(small_design, 2.0, 100, seed=5)
    b = draw_weights(small_design, 2.0, 5000, seed=5)
    assert_array_equal(a, b[:100])


def test_posterior_alpha_draws(small_design):
    post = alpha_posterior(AlphaPrior(), small_design.c_n, int(small_design.n))
    s = bootstrap_functional(small_design, post, 300, seed=2)
    assert s.alphas.shape == (300,)
    assert set(np.round(s.alphas / 0.005)).issubset(set(np.round(post.grid / 0.005)))


def test_single_weight_draw(small_design):
    w = sample_weights(small_design, 1.0, np.random.default_rng(0))
    assert_allclose(w.sum(), small_design.n + 2.0)


def test_singular_replicates_redrawn():
    # K = 1 covariate with a zero ridge variance has only two informative rows
    from mdpols import AugmentedDesign

    des = AugmentedDesign(Xa=np.array([[1.0], [2.0], [0.0]]), ya=np.array([1.0, 2.0, 0.0]),
                          counts=np.array([1.0, 1.0]), S=1)
    s = bootstrap_functional(des, 1.0, 2000, seed=0)
    assert s.rejected > 0
    assert s.B == 2000
    assert np.all(np.isfinite(s.betas))


def test_edf_event_oracle():
    des = ridge_design(hetero_data(n=20, K=2, seed=1))
    event = des.Xa[:, 1] > 0
    fbar, var = edf_event_moments(des, 2.0, event)
    p = des.prior_weights(2.0) / (2.0 + des.n)
    assert_allclose(fbar, p[event].sum())
    assert_allclose(var, fbar * (1 - fbar) / (2.0 + des.n + 1))
    W = draw_weights(des, 2.0, 20, seed=0)
    F = edf_event_draws(W, event, 2.0, des.n)
    assert np.all((F >= 0) & (F <= 1))


def test_csv_roundtrip(tmp_path, small_design):
    s = bootstrap_functional(small_design, 1.0, 10, seed=0)
    path = tmp_path / "b.csv"
    s.to_csv(path)
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    assert_array_equal(back[:, 2:], s.betas)


def test_invalid(small_design):
    with pytest.raises(ValueError):
        bootstrap_functional(small_design, -1.0, 10)
    with pytest.raises(ValueError):
        draw_weights(small_design, 1.0, 0)
