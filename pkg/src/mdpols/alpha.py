"""Prior and grid posterior for the Dirichlet process precision alpha.

The posterior given ``c_n`` distinct values among ``n`` observations is

    pi(alpha | c_n)  propto  pi(alpha) * alpha**c_n * Gamma(alpha) / Gamma(alpha + n)

and is represented only on an equally spaced grid (step 0.005, from 0.005 to
xi). The number of clusters itself follows Antoniak's law, which needs the
signless Stirling numbers of the first kind; these are built in log space.
"""

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .exceptions import PosteriorUnderflowError
from .validation import check_alpha, check_positive_int

GRID_STEP = 0.005
DEFAULT_XI = 3.0
PRIOR_KINDS = ("uniform", "truncated_cauchy")


@lru_cache(maxsize=32)
def _log_stirling_table(n):
    logs = np.zeros(1)  # log s_1(1)
    for m in range(1, n):
        # s_{m+1}(k) = s_m(k-1) + m * s_m(k), with s_m(0) = 0 and s_m(m+1) = 0
        shifted = np.concatenate([[-np.inf], logs])
        scaled = np.concatenate([logs + np.log(m), [-np.inf]])
        logs = np.logaddexp(shifted, scaled)
    logs.setflags(write=False)
    return logs


def log_stirling_first(n):
    """Logs of the signless Stirling numbers of the first kind, ``log s_n(k)`` for k = 1..n."""
    n = check_positive_int(n, "n")
    return _log_stirling_table(n)


def cluster_count_log_pmf(n, k, alpha):
    """``log P(C_n = k | alpha)`` for the number of distinct values in a DP sample."""
    n = check_positive_int(n, "n")
    alpha = check_alpha(alpha)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    return float(log_stirling_first(n)[k - 1] + k * np.log(alpha)
                 + gammaln(alpha) - gammaln(alpha + n))


@dataclass(frozen=True)
class AlphaPrior:
    """``uniform`` on (0, xi) or the xi-truncated Cauchy-type ``1 / (alpha + 1)**2``."""

    kind: str = "uniform"
    xi: float = DEFAULT_XI

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise ValueError(f"prior kind must be one of {PRIOR_KINDS}, got {self.kind!r}")
        if not (np.isfinite(self.xi) and self.xi > 0):
            raise ValueError(f"xi must be positive, got {self.xi!r}")

    def log_density(self, alpha):
        """Unnormalized log density; the grid endpoint xi is kept inside the support."""
        alpha = np.asarray(alpha, dtype=np.float64)
        inside = (alpha > 0) & (alpha <= self.xi * (1 + 1e-12))
        if self.kind == "uniform":
            val = np.full(alpha.shape, -np.log(self.xi))
        else:
            val = -2.0 * np.log1p(np.where(inside, alpha, 0.0))
        return np.where(inside, val, -np.inf)


def alpha_grid(xi=DEFAULT_XI, step=GRID_STEP):
    """Equally spaced grid ``step, 2*step, ..., xi``."""
    count = int(np.floor(xi / step + 1e-9))
    if count < 1:
        raise ValueError(f"xi={xi} is below the grid step {step}")
    return step * np.arange(1, count + 1)


@dataclass(frozen=True)
class AlphaPosterior:
    grid: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if grid.ndim != 1 or grid.shape != weights.shape:
            raise ValueError("grid and weights must be 1-d of equal length")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        grid.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point(cls, alpha):
        return cls(np.array([check_alpha(alpha)]), np.array([1.0]))

    @property
    def mean(self):
        return float(self.grid @ self.weights)

    def sample(self, rng, size=None):
        return rng.choice(self.grid, size=size, p=self.weights)

    def to_dict(self):
        return {"grid": self.grid.tolist(), "weights": self.weights.tolist(),
                "mean": self.mean}

    def to_json(self):
        return json.dumps(self.to_dict())


def log_posterior_kernel(prior, c_n, n, grid):
    grid = np.asarray(grid, dtype=np.float64)
    return prior.log_density(grid) + c_n * np.log(grid) + gammaln(grid) - gammaln(grid + n)


def alpha_posterior(prior, c_n, n, step=GRID_STEP):
    """Grid posterior of alpha given ``c_n`` clusters among ``n`` observations."""
    n = check_positive_int(n, "n")
    c_n = check_positive_int(c_n, "c_n")
    if c_n > n:
        raise ValueError(f"c_n={c_n} exceeds n={n}")
    grid = alpha_grid(prior.xi, step)
    logk = log_posterior_kernel(prior, c_n, n, grid)
    top = np.max(logk)
    if not np.isfinite(top):
        raise PosteriorUnderflowError("alpha posterior kernel is -inf on the whole grid")
    w = np.exp(logk - top)
    total = w.sum()
    if not (total > 0 and np.isfinite(total)):
        raise PosteriorUnderflowError("alpha posterior weights underflowed")
    w /= total
    # second pass removes the last-ulp drift of the first division
    w /= w.sum()
    return AlphaPosterior(grid, w)
