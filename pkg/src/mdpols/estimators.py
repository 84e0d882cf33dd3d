"""scikit-learn compatible regressors wrapping the functional API."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .alpha import DEFAULT_XI, AlphaPrior
from .data import DEFAULT_MASS_MODE, Dataset, RidgeBaseline, augment_ridge, cluster_rows
from .functional import fit_functional, hc0, interval_multiplier, ols


def _design_matrix(X, fit_intercept):
    if fit_intercept:
        return np.column_stack([np.ones(X.shape[0]), X])
    return X


class MDPRegressor(RegressorMixin, BaseEstimator):
    """Linear regression with MDP posterior mean and sandwich posterior covariance.

    Parameters
    ----------
    prior : {"uniform", "truncated_cauchy"}, default="uniform"
        Prior on the DP precision alpha, truncated at ``xi``.
    xi : float, default=3.0
    alpha : float, optional
        Fix alpha instead of marginalizing over its grid posterior.
    ridge_variances : array-like of shape (n_features,), optional
        Baseline variances of the non-intercept columns. Defaults to ones
        (the unit ridge baseline).
    mass_mode : {"normalized", "per_row"}, default="normalized"
        Prior mass per imaginary ridge row: ``alpha / K`` or ``alpha``.
    fit_intercept : bool, default=True
    level : float, default=0.95
        Credible level of ``intervals_``.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    intercept_ : float
    beta_ : ndarray of shape (n_params,)
        All coefficients, intercept first when fitted.
    covariance_ : ndarray of shape (n_params, n_params)
    posterior_sd_, effect_sizes_ : ndarray of shape (n_params,)
    intervals_ : ndarray of shape (n_params, 2)
    gic2_ : float
    alpha_posterior_ : AlphaPosterior or None
    result_ : FitResult
    """

    def __init__(self, prior="uniform", xi=DEFAULT_XI, alpha=None, ridge_variances=None,
                 mass_mode=DEFAULT_MASS_MODE, fit_intercept=True, level=0.95):
        self.prior = prior
        self.xi = xi
        self.alpha = alpha
        self.ridge_variances = ridge_variances
        self.mass_mode = mass_mode
        self.fit_intercept = fit_intercept
        self.level = level

    def _baseline(self, n_features):
        if self.ridge_variances is None:
            v = np.ones(n_features)
        else:
            v = np.asarray(self.ridge_variances, dtype=float)
            if v.shape != (n_features,):
                raise ValueError(f"ridge_variances must have shape ({n_features},)")
        if self.fit_intercept:
            v = np.concatenate([[0.0], v])
        return RidgeBaseline(v, intercept=self.fit_intercept)

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True, dtype=np.float64)
        Xd = _design_matrix(X, self.fit_intercept)
        names = ([f"x{j}" for j in range(X.shape[1])])
        if self.fit_intercept:
            names = ["Intercept"] + names
        data = Dataset(y=y, X=Xd, column_names=names, intercept=self.fit_intercept)
        design = augment_ridge(cluster_rows(data), self._baseline(X.shape[1]),
                               mass_mode=self.mass_mode)
        p = X.shape[1]
        if self.alpha is None:
            res = fit_functional(design, prior=AlphaPrior(self.prior, self.xi),
                                 level=self.level, p=p)
            self.alpha_posterior_ = res.alpha_summary
        else:
            res = fit_functional(design, alpha=self.alpha, level=self.level, p=p)
            self.alpha_posterior_ = None
        self.result_ = res
        self.beta_ = res.beta
        self.covariance_ = res.cov
        self.posterior_sd_ = res.psd
        self.intervals_ = res.intervals
        self.effect_sizes_ = res.effect_sizes
        self.gic2_ = res.gic2
        if self.fit_intercept:
            self.intercept_ = float(res.beta[0])
            self.coef_ = res.beta[1:]
        else:
            self.intercept_ = 0.0
            self.coef_ = res.beta
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False, dtype=np.float64)
        return X @ self.coef_ + self.intercept_


class HC0Regressor(RegressorMixin, BaseEstimator):
    """OLS with White's HC0 sandwich covariance.

    Raises :class:`~mdpols.exceptions.SingularDesignError` on a singular
    design; :class:`MDPRegressor` handles that case through ridge shrinkage.
    """

    def __init__(self, fit_intercept=True, level=0.95):
        self.fit_intercept = fit_intercept
        self.level = level

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True, dtype=np.float64)
        Xd = _design_matrix(X, self.fit_intercept)
        if Xd.shape[0] < Xd.shape[1]:
            raise ValueError(f"n_samples={Xd.shape[0]} is fewer than the {Xd.shape[1]} "
                             "parameters; OLS is undefined")
        beta = ols(Xd, y)
        cov = hc0(Xd, y)
        se = np.sqrt(np.diag(cov))
        z = interval_multiplier(self.level)
        self.beta_ = beta
        self.covariance_ = cov
        self.standard_errors_ = se
        self.intervals_ = np.column_stack([beta - z * se, beta + z * se])
        if self.fit_intercept:
            self.intercept_ = float(beta[0])
            self.coef_ = beta[1:]
        else:
            self.intercept_ = 0.0
            self.coef_ = beta
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False, dtype=np.float64)
        return X @ self.coef_ + self.intercept_
