import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from mdpols import (
    AlphaPrior,
    Dataset,
    IllConditionedWarning,
    RidgeBaseline,
    SingularDesignError,
    alpha_posterior,
    augment_ridge,
    cluster_rows,
    fit_functional,
    hc0,
    sandwich_cov,
    wls_mean,
)
from mdpols.functional import influence_matrix, interval_multiplier, weighted_sandwich, weighted_solve
from mdpols.moments import conditional_moments, limiting_moments, marginal_moments

from conftest import hetero_data, ridge_design


def _hc0_reference(X, y):
    Gi = np.linalg.inv(X.T @ X)
    u = y - X @ (Gi @ X.T @ y)
    return Gi @ (X.T * u**2) @ X @ Gi


def test_hc0_two_point():
    X = np.ones((2, 1))
    assert_allclose(hc0(X, np.array([0.0, 2.0])), [[0.5]], rtol=1e-15)


def test_hc0_matches_reference():
    d = hetero_data(n=40, K=3, seed=2)
    assert_allclose(hc0(d.X, d.y), _hc0_reference(d.X, d.y), rtol=1e-10)


@st.composite
def ridge_instances(draw):
    n = draw(st.integers(6, 50))
    K = draw(st.integers(2, 5))
    seed = draw(st.integers(0, 2**32 - 1))
    alpha = draw(st.sampled_from([0.1, 1.0, 3.0]))
    return n, K, seed, alpha


@given(ridge_instances())
@settings(max_examples=40, deadline=None)
def test_ridge_oracle_both_modes(inst):
    n, K, seed, alpha = inst
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.normal(size=(n, K - 1))])
    y = rng.normal(size=n)
    v = np.concatenate([[0.0], rng.uniform(0.5, 2.0, K - 1)])
    cd = cluster_rows(Dataset(y=y, X=X, column_names=[f"c{j}" for j in range(K)]))
    for mode, scale in (("per_row", alpha), ("normalized", alpha / K)):
        des = augment_ridge(cd, RidgeBaseline(v), mass_mode=mode)
        got = wls_mean(des, conditional_moments(des, alpha).mean)
        expect = np.linalg.solve(X.T @ X + scale * np.diag(v), X.T @ y)
        assert_allclose(got, expect, rtol=1e-10, atol=1e-12)


def test_sandwich_three_forms_agree(small_design):
    m = conditional_moments(small_design, 1.5)
    dense = sandwich_cov(small_design, m, method="dense")
    structured = sandwich_cov(small_design, m)
    closed = weighted_sandwich(small_design.Xa, small_design.ya, m.mean)
    assert_allclose(structured, dense, rtol=1e-10, atol=1e-14)
    assert_allclose(closed, dense, rtol=1e-10, atol=1e-14)


def test_marginal_sandwich_structured_vs_dense(small_design):
    post = alpha_posterior(AlphaPrior(), small_design.c_n, int(small_design.n))
    m = marginal_moments(small_design, post)
    assert_allclose(sandwich_cov(small_design, m), sandwich_cov(small_design, m, method="dense"),
                    rtol=1e-10, atol=1e-14)


def test_residual_orthogonality(small_design):
    m = conditional_moments(small_design, 0.7)
    R, _ = influence_matrix(small_design, m.mean)
    assert_allclose(R.T @ m.mean, 0.0, atol=1e-10)


def test_alpha_zero_limit_exact():
    d = hetero_data(n=35, K=3, seed=4)
    des = ridge_design(d)
    cov = sandwich_cov(des, limiting_moments(des))
    n = d.n
    assert_allclose(cov, n / (n + 1) * hc0(d.X, d.y), rtol=1e-10)


def test_singular_design_raises():
    x = np.arange(6.0)
    X = np.column_stack([np.ones(6), x, 2 * x])
    with pytest.raises(SingularDesignError, match="ridge"):
        hc0(X, x + 1.0)
    with pytest.raises(SingularDesignError):
        weighted_solve(X, x, np.ones(6))


def test_ridge_rescues_collinear_design():
    rng = np.random.default_rng(0)
    x = rng.normal(size=30)
    X = np.column_stack([np.ones(30), x, 2 * x])
    d = Dataset(y=1 + x + rng.normal(size=30), X=X, column_names=["Intercept", "a", "b"])
    res = fit_functional(ridge_design(d), prior=AlphaPrior())
    assert np.all(np.isfinite(res.psd))
    # the two copies share the effect in the 1:2 ratio of their scales
    assert_allclose(res.beta[2] / res.beta[1], 2.0, rtol=1e-8)


def test_near_collinear_hc0_inflates_relative_to_mdp():
    # a standardized trend and its square, nearly collinear over a short span of years
    years = np.repeat(np.arange(2000, 2016), 20).astype(float)
    rng = np.random.default_rng(5)
    t = (years - years.mean()) / years.std(ddof=1)
    t2 = years**2
    t2 = (t2 - t2.mean()) / t2.std(ddof=1)
    X = np.column_stack([np.ones(years.size), t, t2])
    y = 0.3 * t + rng.normal(size=years.size)
    d = Dataset(y=y, X=X, column_names=["Intercept", "Year", "Year2"])
    se_hc0 = np.sqrt(np.diag(hc0(X, y)))
    res = fit_functional(ridge_design(d), prior=AlphaPrior())
    assert np.all(se_hc0[1:] > 5 * res.psd[1:])


def test_ill_conditioned_warning():
    x = np.linspace(0, 1, 50)
    X = np.column_stack([np.ones(50), x, x + 1e-7 * np.sin(40 * x)])
    with pytest.warns(IllConditionedWarning):
        weighted_solve(X, x, np.ones(50))


def test_fit_result_fields(small_design):
    res = fit_functional(small_design, alpha=2.0)
    z = 1.96
    assert_allclose(res.intervals[:, 0], res.beta - z * res.psd)
    assert_allclose(res.effect_sizes, res.beta / res.psd)
    resid = small_design.ya - small_design.Xa @ res.beta
    p = small_design.K - 1
    assert_allclose(res.gic2, (resid @ resid + 2 * p) / (small_design.n + 2.0), rtol=1e-14)
    d = json.loads(res.to_json())
    assert d["beta"] == res.beta.tolist()
    assert np.array_equal(res.significant, (res.intervals[:, 0] > 0) | (res.intervals[:, 1] < 0))


def test_fit_requires_exactly_one_alpha_source(small_design):
    with pytest.raises(ValueError):
        fit_functional(small_design)
    with pytest.raises(ValueError):
        fit_functional(small_design, prior=AlphaPrior(), alpha=1.0)


def test_interval_multiplier():
    assert interval_multiplier(0.95) == 1.96
    assert_allclose(interval_multiplier(0.9), 1.6448536269514722)
    with pytest.raises(ValueError):
        interval_multiplier(1.0)


def test_summary_reproduces_rounded_table_entries(small_design):
    # unrounded coefficient / pSD pairs whose ES and intervals round to published entries
    beta = np.array([12.90, 0.1354, 0.5954])
    psd = np.array([0.1773, 0.0419, 0.2835])
    from mdpols.functional import summarize_fit

    res = summarize_fit(beta, np.diag(psd**2), small_design, 3.0)
    assert_allclose(res.effect_sizes, [72.76, 3.23, 2.10], atol=0.005)
    assert_allclose(res.intervals[1:], [[0.05, 0.22], [0.04, 1.15]], atol=0.005)
    assert res.significant.all()
