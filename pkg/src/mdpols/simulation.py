"""Coverage study of 95% intervals for the slope under heteroscedastic noise.

Data: ``y_i ~ N(1 + x_i, exp(a_h x_i + a_h x_i**2))`` with ``x_i`` from one of
four covariate laws. The covariate is centered before fitting. Models are the
MDP functional under the uniform or truncated Cauchy-type prior (unit ridge
baseline) and OLS with White's HC0 covariance.
"""

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .alpha import DEFAULT_XI, AlphaPrior
from .data import Dataset, RidgeBaseline, augment_ridge, cluster_rows, standardize
from .exceptions import SingularDesignError
from .functional import fit_functional, hc0, interval_multiplier, ols

COVARIATE_DISTS = ("U01", "Ex1", "N0_25", "AR1_student")
MODELS = ("mdp_cauchy", "mdp_uniform", "hc0", "oracle")
DESIGN_LEVELS = {
    "U01": (0.0, 1.0, 2.0, 2.5),
    "Ex1": (0.0, 0.05, 0.1, 0.15),
    "N0_25": (0.0, 0.05, 0.1, 0.15),
    "AR1_student": (0.0, 0.05, 0.1, 0.15),
}
TRUE_SLOPE = 1.0


@dataclass(frozen=True)
class SimConfig:
    covariate_dist: str = "U01"
    a_h: float = 0.0
    n: int = 100
    reps: int = 2000
    models: tuple = ("mdp_cauchy", "mdp_uniform", "hc0")
    xi: float = DEFAULT_XI
    seed: int = 0
    ar1_x0: float = 0.0
    mass_mode: str = "normalized"
    level: float = 0.95

    def __post_init__(self):
        if self.covariate_dist not in COVARIATE_DISTS:
            raise ValueError(f"covariate_dist must be one of {COVARIATE_DISTS}")
        if self.n < 3:
            raise ValueError("n must be at least 3")
        unknown = set(self.models) - set(MODELS)
        if unknown:
            raise ValueError(f"unknown models {sorted(unknown)}; choose from {MODELS}")

    @property
    def label(self):
        return f"{self.covariate_dist},{self.a_h:g},{self.n}"


def draw_covariate(config, rng):
    n = config.n
    dist = config.covariate_dist
    if dist == "U01":
        return rng.uniform(0.0, 1.0, n)
    if dist == "Ex1":
        return rng.exponential(1.0, n)
    if dist == "N0_25":
        return rng.normal(0.0, 5.0, n)
    eps = rng.standard_t(n - 1, n)
    x = np.empty(n)
    prev = config.ar1_x0
    for i in range(n):
        prev = 1.0 + 0.5 * prev + eps[i]
        x[i] = prev
    return x


def noise_variance(x, a_h):
    return np.exp(a_h * x + a_h * x * x)


def simulate_dataset(config, rng):
    """One synthetic dataset, covariate already centered."""
    x = draw_covariate(config, rng)
    y = 1.0 + TRUE_SLOPE * x + np.sqrt(noise_variance(x, config.a_h)) * rng.standard_normal(config.n)
    raw = Dataset(y=y, X=np.column_stack([np.ones(config.n), x]), column_names=("Intercept", "x"))
    centered, _ = standardize(raw, "center")
    return centered


def slope_interval(model, data, config):
    """``(low, high)`` interval for the slope under ``model``."""
    if model == "oracle":
        return -np.inf, np.inf
    if model == "hc0":
        beta = ols(data.X, data.y)
        se = np.sqrt(hc0(data.X, data.y)[1, 1])
        z = interval_multiplier(config.level)
        return beta[1] - z * se, beta[1] + z * se
    kind = "uniform" if model == "mdp_uniform" else "truncated_cauchy"
    design = augment_ridge(cluster_rows(data), RidgeBaseline.unit(data.K),
                           mass_mode=config.mass_mode)
    res = fit_functional(design, prior=AlphaPrior(kind, config.xi), level=config.level)
    return tuple(res.intervals[1])


def _replicate(config, seq):
    rng = np.random.Generator(np.random.Philox(seq))
    data = simulate_dataset(config, rng)
    out = {}
    for model in config.models:
        try:
            lo, hi = slope_interval(model, data, config)
            out[model] = bool(lo <= TRUE_SLOPE <= hi)
        except SingularDesignError:
            out[model] = None
    return out


@dataclass(frozen=True)
class CoverageRow:
    cell: str
    model: str
    coverage: float
    mc_se: float
    reps: int
    failures: int


@dataclass(frozen=True, eq=False)
class CoverageTable:
    rows: list = field(default_factory=list)

    def get(self, cell, model):
        for r in self.rows:
            if r.cell == cell and r.model == model:
                return r
        raise KeyError((cell, model))

    def to_csv(self, path_or_file):
        own = isinstance(path_or_file, (str, os.PathLike))
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["cell", "model", "coverage", "mc_se", "reps", "failures"])
            for r in self.rows:
                w.writerow([r.cell, r.model, f"{r.coverage:.4f}", f"{r.mc_se:.4f}",
                            r.reps, r.failures])
        finally:
            if own:
                fh.close()


def coverage_study(configs, n_jobs=1):
    """Coverage of each configured model for every config; bit-stable across ``n_jobs``.

    Replicate ``r`` of a config draws from the ``r``-th child of
    ``SeedSequence(config.seed)``. Singular fits are excluded and counted.
    """
    if isinstance(configs, SimConfig):
        configs = [configs]
    rows = []
    for config in configs:
        if config.reps < 100:
            raise ValueError("reps must be at least 100")
        children = np.random.SeedSequence(config.seed).spawn(config.reps)
        if n_jobs > 1:
            with ThreadPoolExecutor(max_workers=n_jobs) as pool:
                results = list(pool.map(lambda s: _replicate(config, s), children))
        else:
            results = [_replicate(config, s) for s in children]
        for model in config.models:
            hits = [r[model] for r in results if r[model] is not None]
            failures = config.reps - len(hits)
            c = float(np.mean(hits)) if hits else float("nan")
            se = float(np.sqrt(c * (1.0 - c) / len(hits))) if hits else float("nan")
            rows.append(CoverageRow(config.label, model, c, se, len(hits), failures))
    return CoverageTable(rows)
