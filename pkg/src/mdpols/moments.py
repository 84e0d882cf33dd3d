"""Mean and covariance of the Polya-urn bootstrap weights n*.

Given alpha, the weight vector over the ``c_n + S`` rows of an augmented
design is a scaled multinomial with

    E(n* | alpha) = (n + alpha + 1) * p_alpha
    V(n* | alpha) = diag(E) - E E^T / (n + alpha + 1)

where ``p_alpha = (n_1, ..., n_c, m, ..., m) / (alpha + n)`` and ``m`` is the
per-row imaginary mass of the design. Marginal moments mix these over the
alpha grid posterior by the law of total covariance.

Every covariance here is diagonal plus low rank, ``diag(d) + F C F^T``;
``WeightMoments.cov`` materializes the dense matrix on request.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .alpha import AlphaPosterior
from .validation import check_alpha


@dataclass(frozen=True, eq=False)
class WeightMoments:
    mean: np.ndarray
    diag: np.ndarray
    factors: np.ndarray
    core: np.ndarray
    conditional_alpha: float = None

    @cached_property
    def cov(self):
        C = np.diag(self.diag) + self.factors @ self.core @ self.factors.T
        return 0.5 * (C + C.T)

    @property
    def is_marginal(self):
        return self.conditional_alpha is None

    def project(self, R):
        """``R^T cov R`` without forming the dense covariance."""
        RF = R.T @ self.factors
        out = (R.T * self.diag) @ R + RF @ self.core @ RF.T
        return 0.5 * (out + out.T)

    def to_dict(self):
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist(),
                "conditional_alpha": self.conditional_alpha}


def conditional_moments(design, alpha):
    """Exact weight moments at a fixed ``alpha > 0``."""
    alpha = check_alpha(alpha)
    n = design.n
    total = n + alpha + 1.0
    mean = total * design.prior_weights(alpha) / (alpha + n)
    return WeightMoments(mean=mean, diag=mean.copy(), factors=mean[:, None].copy(),
                         core=np.array([[-1.0 / total]]), conditional_alpha=alpha)


def limiting_moments(design):
    """The ``alpha -> 0`` limit: imaginary rows get zero weight, real rows ``(n + 1) n_c / n``."""
    n = design.n
    total = n + 1.0
    mean = total * design.prior_weights(0.0) / n
    return WeightMoments(mean=mean, diag=mean.copy(), factors=mean[:, None].copy(),
                         core=np.array([[-1.0 / total]]), conditional_alpha=0.0)


def marginal_moments(design, post):
    """Weight moments averaged over an alpha grid posterior.

    The conditional means all lie in the span of ``r = (counts, 0)`` and
    ``s = (0, 1_S)``, so the between-alpha term stays rank two.
    """
    if not isinstance(post, AlphaPosterior):
        raise TypeError("post must be an AlphaPosterior")
    if post.grid.shape[0] == 1:
        return conditional_moments(design, float(post.grid[0]))
    n = design.n
    alphas = post.grid
    pi = post.weights
    totals = n + alphas + 1.0
    a = totals / (alphas + n)
    mass = np.array([design.imaginary_mass(al) for al in alphas])
    b = a * mass

    r = np.concatenate([design.counts, np.zeros(design.S)])
    if design.S:
        s = np.concatenate([np.zeros(design.c_n), np.ones(design.S)])
        basis = np.column_stack([r, s])
        coef = np.column_stack([a, b])
    else:
        basis = r[:, None]
        coef = a[:, None]
    vbar = pi @ coef
    # sum_alpha pi (1 - 1/N_alpha) v v^T  -  vbar vbar^T, summed in grid order
    scale = pi * (1.0 - 1.0 / totals)
    core = (coef.T * scale) @ coef - np.outer(vbar, vbar)
    mean = basis @ vbar
    return WeightMoments(mean=mean, diag=mean.copy(), factors=basis, core=0.5 * (core + core.T),
                         conditional_alpha=None)


def mixture_term(design, post):
    """Between-alpha dispersion ``sum pi E E^T - Ebar Ebar^T`` as a dense matrix."""
    n = design.n
    means = np.array([(n + al + 1.0) * design.prior_weights(al) / (al + n) for al in post.grid])
    Ebar = post.weights @ means
    M = (means.T * post.weights) @ means - np.outer(Ebar, Ebar)
    return 0.5 * (M + M.T)
