"""Vibration of Effects over (covariate subset x alpha) and hidden-confounder sensitivity.

For each alpha on the grid, LAR is run on the ridge-augmented and
standardized data; every active set along the path that contains the
treatment is refitted at that alpha with the unit ridge baseline, giving one
(effect size, GIC2) cell. Sensitivity draws adjust the treatment coefficient
for a binary omitted confounder U through ``beta_T = beta_T~ - gamma (mu1 - mu0)``.
"""

import contextlib
import csv
import os
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .alpha import GRID_STEP, AlphaPrior, alpha_grid
from .data import RidgeBaseline, augment_ridge, cluster_rows
from .functional import fit_functional
from .lars import lars_path
from .validation import check_positive_int


@dataclass(frozen=True)
class VoECell:
    alpha: float
    subset: tuple
    effect_size: float
    gic2: float
    beta_T: float
    psd_T: float
    step: int = 0


@dataclass(frozen=True)
class SensitivityDraw:
    gamma: float
    lam: tuple
    mu1: float
    mu0: float
    beta_T_adjusted: float
    es_adjusted: float


def _check_treatment(data, treatment):
    if not data.intercept:
        raise ValueError("VoE and sensitivity analyses need an intercept column")
    if not 1 <= treatment < data.K:
        raise ValueError(f"treatment must be a non-intercept column index, got {treatment}")


def augmented_standardized(data, alpha):
    """Ridge-augmented covariates and response, each column standardized (divisor n - 1).

    The intercept column is dropped; the intercept's all-zero ridge row is kept.
    """
    X0 = data.X[:, 1:]
    Kp = X0.shape[1]
    imag = np.vstack([np.zeros((1, Kp)), np.sqrt(alpha) * np.eye(Kp)])
    Xt = np.vstack([X0, imag])
    yt = np.concatenate([data.y, np.zeros(Kp + 1)])
    Xt = Xt - Xt.mean(axis=0)
    Xt = Xt / Xt.std(axis=0, ddof=1)
    yt = yt - yt.mean()
    sd = yt.std(ddof=1)
    if sd > 0:
        yt = yt / sd
    return Xt, yt


class SubsetFitter:
    """Fits of ``Intercept + subset`` at fixed alpha, caching one design per subset."""

    def __init__(self, data, mass_mode="normalized"):
        self.data = data
        self.mass_mode = mass_mode
        self._designs = {}

    def design(self, subset):
        subset = tuple(sorted(subset))
        d = self._designs.get(subset)
        if d is None:
            sub = self.data.select((0,) + subset)
            cd = cluster_rows(sub)
            d = augment_ridge(cd, RidgeBaseline.unit(sub.K), mass_mode=self.mass_mode)
            self._designs[subset] = d
        return d

    def fit(self, subset, alpha):
        subset = tuple(sorted(subset))
        return fit_functional(self.design(subset), alpha=alpha, p=len(subset))


def fit_subset(data, subset, alpha, mass_mode="normalized"):
    """Standalone MDP fit of ``Intercept + subset`` at a fixed alpha."""
    return SubsetFitter(data, mass_mode).fit(subset, alpha)


def voe_analysis(data, treatment, prior=None, mass_mode="normalized", step=GRID_STEP,
                 grid=None):
    """VoE cells for ``treatment`` over the alpha grid, sorted by GIC2 ascending.

    ``data`` should already carry the standardization used for inference;
    subsets reuse it. Returns an empty list if the treatment never enters.
    """
    _check_treatment(data, treatment)
    prior = prior or AlphaPrior()
    alphas = alpha_grid(prior.xi, step) if grid is None else np.asarray(grid, dtype=float)
    fitter = SubsetFitter(data, mass_mode)
    t = treatment - 1
    cells = []
    for alpha in alphas:
        Xt, yt = augmented_standardized(data, alpha)
        path = lars_path(Xt, yt)
        for k, (active, _) in enumerate(path.steps[1:], start=1):
            if t not in active:
                continue
            subset = tuple(sorted(j + 1 for j in active))
            res = fitter.fit(subset, float(alpha))
            pos = subset.index(treatment) + 1
            cells.append(VoECell(
                alpha=float(alpha),
                subset=subset,
                effect_size=float(res.effect_sizes[pos]),
                gic2=res.gic2,
                beta_T=float(res.beta[pos]),
                psd_T=float(res.psd[pos]),
                step=k,
            ))
    cells.sort(key=lambda c: c.gic2)
    return cells


def _open(path_or_file):
    if isinstance(path_or_file, (str, os.PathLike)):
        return open(path_or_file, "w", newline="")
    return contextlib.nullcontext(path_or_file)


def write_voe_csv(cells, path, column_names=None):
    """Write cells to a path or an open text file."""
    with _open(path) as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "subset", "ES", "GIC2", "beta_T", "psd_T", "step"])
        for c in cells:
            names = ([column_names[j] for j in c.subset] if column_names
                     else [str(j) for j in c.subset])
            w.writerow([f"{c.alpha:.3f}", "+".join(names), f"{c.effect_size:.4g}",
                        f"{c.gic2:.4g}", f"{c.beta_T:.4g}", f"{c.psd_T:.4g}", c.step])


def confounder_adjustment(beta_T, psd_T, t, others, gamma, lam):
    """Adjust ``beta_T`` for a binary confounder with logistic model coefficients ``lam``.

    ``lam = (intercept, treatment, *others)``; ``mu1``/``mu0`` average the
    logistic probabilities over the observed rows of ``others`` with the
    treatment fixed at its maximum/minimum.
    """
    t = np.asarray(t, dtype=float)
    others = np.asarray(others, dtype=float).reshape(t.shape[0], -1)
    lam = np.asarray(lam, dtype=float)
    if lam.shape[0] != 2 + others.shape[1]:
        raise ValueError(f"lam needs {2 + others.shape[1]} entries, got {lam.shape[0]}")
    base = lam[0] + others @ lam[2:]
    mu1 = float(expit(base + lam[1] * t.max()).mean())
    mu0 = float(expit(base + lam[1] * t.min()).mean())
    beta = beta_T - gamma * (mu1 - mu0)
    return SensitivityDraw(gamma=float(gamma), lam=tuple(lam.tolist()), mu1=mu1, mu0=mu0,
                           beta_T_adjusted=float(beta), es_adjusted=float(beta / psd_T))


def sensitivity_analysis(fit, data, treatment, n_draws=50, seed=None):
    """Effect sizes under ``n_draws`` standard-normal draws of ``(gamma, lam)``.

    ``fit`` is a :class:`~mdpols.functional.FitResult` on ``data``'s columns;
    the treatment column must be zero-mean centered.
    """
    _check_treatment(data, treatment)
    n_draws = check_positive_int(n_draws, "n_draws")
    t = data.X[:, treatment]
    if abs(t.mean()) > 1e-8 * max(1.0, np.abs(t).max()):
        raise ValueError("treatment column must be zero-mean centered")
    others = data.X[:, [j for j in range(1, data.K) if j != treatment]]
    beta_T = float(fit.beta[treatment])
    psd_T = float(fit.psd[treatment])
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    draws = []
    for child in seq.spawn(n_draws):
        rng = np.random.Generator(np.random.Philox(child))
        gamma = rng.standard_normal()
        lam = rng.standard_normal(2 + others.shape[1])
        draws.append(confounder_adjustment(beta_T, psd_T, t, others, gamma, lam))
    return draws


def write_sensitivity_csv(draws, path):
    """Write one row per draw to a path or an open text file."""
    with _open(path) as fh:
        w = csv.writer(fh)
        w.writerow(["draw", "gamma", "mu1", "mu0", "beta_T", "ES", "lambda"])
        for i, d in enumerate(draws):
            w.writerow([i, f"{d.gamma:.4g}", f"{d.mu1:.4g}", f"{d.mu0:.4g}",
                        f"{d.beta_T_adjusted:.4g}", f"{d.es_adjusted:.4g}",
                        " ".join(f"{v:.4g}" for v in d.lam)])
