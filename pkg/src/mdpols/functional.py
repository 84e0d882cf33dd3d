"""Posterior mean and delta-method covariance of the OLS functional.

With weights ``w`` over the rows of an augmented design ``(XX, YY)`` the OLS
functional is the WLS solution ``beta(w) = (XX' W XX)^-1 XX' W YY``. At the
posterior mean weights ``nbar`` this is the exact posterior mean of the
linearized functional, and its posterior covariance is

    R(nbar)' V(n*) R(nbar),   R = diag(u) XX (XX' diag(nbar) XX)^-1,  u = YY - XX beta(nbar).

Because ``R' nbar = 0`` (the weighted normal equations), the rank-one part of
a conditional weight covariance drops out and the result is the weighted
sandwich ``G^-1 XX' diag(nbar * u**2) XX G^-1``.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.stats import norm

from .alpha import AlphaPosterior, alpha_posterior
from .exceptions import IllConditionedWarning, SingularDesignError
from .moments import conditional_moments, marginal_moments
from .validation import as_matrix, as_vector, check_weights

WARN_CONDITION = 1e10


@dataclass(frozen=True)
class WeightedSolve:
    beta: np.ndarray
    gram_inv: np.ndarray
    condition: float


def weighted_solve(X, y, w, warn=True):
    """Solve the weighted normal equations by pivoted QR of ``sqrt(w) X``.

    Raises :class:`SingularDesignError` when the weighted design is
    numerically rank deficient; warns when cond(X' W X) exceeds 1e10.
    """
    sw = np.sqrt(w)
    A = sw[:, None] * X
    Q, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    K = X.shape[1]
    if d.shape[0] < K or d[0] == 0.0:
        raise SingularDesignError("weighted design has fewer informative rows than columns",
                                  np.inf)
    tol = max(A.shape) * np.finfo(float).eps * d[0]
    if d[-1] <= tol:
        raise SingularDesignError("weighted Gram matrix is singular",
                                  (d[0] / max(d[-1], np.finfo(float).tiny)) ** 2)
    condition = float(np.linalg.cond(R) ** 2)
    if warn and condition > WARN_CONDITION:
        warnings.warn(f"weighted Gram matrix is ill-conditioned (cond ~ {condition:.3e})",
                      IllConditionedWarning, stacklevel=3)
    z = scipy.linalg.solve_triangular(R, Q.T @ (sw * y))
    beta = np.empty(K)
    beta[piv] = z
    Rinv = scipy.linalg.solve_triangular(R, np.eye(K))
    gram_inv = np.empty((K, K))
    gram_inv[np.ix_(piv, piv)] = Rinv @ Rinv.T
    return WeightedSolve(beta=beta, gram_inv=gram_inv, condition=condition)


def wls_mean(design, weights):
    """WLS coefficients of the augmented design under row weights."""
    w = check_weights(weights, design.size)
    return weighted_solve(design.Xa, design.ya, w).beta


def influence_matrix(design, weights):
    """``R = diag(u) XX G^-1`` evaluated at ``weights``; returns ``(R, beta)``."""
    sol = weighted_solve(design.Xa, design.ya, check_weights(weights, design.size))
    u = design.ya - design.Xa @ sol.beta
    return (u[:, None] * design.Xa) @ sol.gram_inv, sol.beta


def sandwich_cov(design, moments, method="structured"):
    """Delta-method posterior covariance ``R' V(n*) R`` at the mean weights.

    ``method="structured"`` uses the diagonal-plus-low-rank form of the
    weight covariance; ``"dense"`` multiplies through the materialized matrix.
    """
    R, _ = influence_matrix(design, moments.mean)
    if method == "structured":
        return moments.project(R)
    if method == "dense":
        out = R.T @ moments.cov @ R
        return 0.5 * (out + out.T)
    raise ValueError(f"method must be 'structured' or 'dense', got {method!r}")


def weighted_sandwich(X, y, w):
    """``G^-1 X' diag(w * u**2) X G^-1`` with ``G = X' diag(w) X`` and WLS residuals ``u``."""
    X = as_matrix(X)
    y = as_vector(y, length=X.shape[0])
    w = check_weights(w, X.shape[0])
    sol = weighted_solve(X, y, w)
    u = y - X @ sol.beta
    meat = (X.T * (w * u * u)) @ X
    out = sol.gram_inv @ meat @ sol.gram_inv
    return 0.5 * (out + out.T)


def ols(X, y):
    X = as_matrix(X)
    y = as_vector(y, length=X.shape[0])
    return weighted_solve(X, y, np.ones(X.shape[0])).beta


def hc0(X, y):
    """White's heteroscedasticity-consistent covariance of the OLS estimator."""
    X = as_matrix(X)
    y = as_vector(y, length=X.shape[0])
    try:
        return weighted_sandwich(X, y, np.ones(X.shape[0]))
    except SingularDesignError as exc:
        raise SingularDesignError(
            "X'X is singular, so OLS and HC0 are undefined; use the MDP ridge "
            "baseline (ridge variances > 0) to obtain a defined posterior covariance",
            exc.condition) from None


@dataclass(frozen=True, eq=False)
class FitResult:
    beta: np.ndarray
    cov: np.ndarray
    psd: np.ndarray
    intervals: np.ndarray
    effect_sizes: np.ndarray
    gic2: float
    alpha_summary: object
    column_names: tuple = ()
    level: float = 0.95
    ols_beta: np.ndarray = None
    ols_se: np.ndarray = None
    extra: dict = field(default_factory=dict)

    @property
    def significant(self):
        """True where the credible interval excludes zero."""
        return (self.intervals[:, 0] > 0) | (self.intervals[:, 1] < 0)

    @property
    def alpha_mean(self):
        if isinstance(self.alpha_summary, AlphaPosterior):
            return self.alpha_summary.mean
        return float(self.alpha_summary)

    def names(self):
        if self.column_names:
            return list(self.column_names)
        return [f"x{j}" for j in range(self.beta.shape[0])]

    def to_dict(self):
        alpha = (self.alpha_summary.to_dict() if isinstance(self.alpha_summary, AlphaPosterior)
                 else {"fixed": float(self.alpha_summary)})
        out = {
            "columns": self.names(),
            "beta": self.beta.tolist(),
            "cov": self.cov.tolist(),
            "psd": self.psd.tolist(),
            "intervals": self.intervals.tolist(),
            "effect_sizes": self.effect_sizes.tolist(),
            "significant": self.significant.tolist(),
            "gic2": self.gic2,
            "level": self.level,
            "alpha_mean": self.alpha_mean,
            "alpha": alpha,
        }
        if self.ols_beta is not None:
            out["ols_beta"] = self.ols_beta.tolist()
            out["ols_se"] = self.ols_se.tolist()
        out.update(self.extra)
        return out

    def to_json(self, include_alpha_posterior=False):
        d = self.to_dict()
        if not include_alpha_posterior and "grid" in d["alpha"]:
            d["alpha"] = {"posterior_mean": self.alpha_mean}
        return json.dumps(d, indent=2)

    def table(self):
        """Rows in the coefficient / pSD / ES / interval (/ OLS / SE) layout."""
        rows = []
        for j, name in enumerate(self.names()):
            row = {"term": name, "coef": self.beta[j], "pSD": self.psd[j],
                   "ES": self.effect_sizes[j], "PI_low": self.intervals[j, 0],
                   "PI_high": self.intervals[j, 1]}
            if self.ols_beta is not None:
                row["OLS"] = self.ols_beta[j]
                row["SE"] = self.ols_se[j]
            rows.append(row)
        return rows


def interval_multiplier(level):
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if level == 0.95:
        return 1.96
    return float(norm.ppf(0.5 + level / 2.0))


def summarize_fit(beta, cov, design, alpha, p=None, level=0.95, column_names=None):
    """Posterior SDs, credible intervals, effect sizes and GIC2 of a fit.

    ``alpha`` is a fixed value or an :class:`AlphaPosterior`; marginal fits use
    the posterior mean of alpha in the ``1 / (n + alpha)`` factor of GIC2.
    ``p`` defaults to the number of non-intercept columns.
    """
    beta = as_vector(beta, name="beta")
    cov = np.asarray(cov, dtype=np.float64)
    var = np.diag(cov).copy()
    if np.any(var < -1e-10):
        raise ValueError(f"covariance has negative diagonal entries: {var[var < 0]}")
    psd = np.sqrt(np.clip(var, 0.0, None))
    z = interval_multiplier(level)
    intervals = np.column_stack([beta - z * psd, beta + z * psd])
    with np.errstate(divide="ignore", invalid="ignore"):
        es = beta / psd
    alpha_value = alpha.mean if isinstance(alpha, AlphaPosterior) else float(alpha)
    if p is None:
        p = design.K - 1
    resid = design.ya - design.Xa @ beta
    gic2 = float((resid @ resid + 2.0 * p) / (design.n + alpha_value))
    names = tuple(column_names) if column_names is not None else tuple(design.column_names)
    return FitResult(beta=beta, cov=cov, psd=psd, intervals=intervals, effect_sizes=es,
                     gic2=gic2, alpha_summary=alpha, column_names=names, level=level)


def fit_functional(design, prior=None, alpha=None, level=0.95, p=None):
    """Full MDP fit of an augmented design.

    Pass either ``prior`` (marginalize alpha over its grid posterior, with
    ``c_n`` and ``n`` read off the design) or a fixed ``alpha``.
    """
    if (prior is None) == (alpha is None):
        raise ValueError("give exactly one of prior or alpha")
    if prior is not None:
        post = alpha_posterior(prior, design.c_n, int(round(design.n)))
        moments = marginal_moments(design, post)
        summary = post
    else:
        moments = conditional_moments(design, alpha)
        summary = float(alpha)
    beta = wls_mean(design, moments.mean)
    cov = sandwich_cov(design, moments)
    return summarize_fit(beta, cov, design, summary, p=p, level=level)
