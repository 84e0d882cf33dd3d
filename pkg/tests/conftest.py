import numpy as np
import pytest

from mdpols import Dataset, RidgeBaseline, augment_ridge, cluster_rows

_VERDICTS = []


@pytest.fixture
def report():
    """Record one ``PASS``/``FAIL`` line; all lines are echoed in the terminal summary."""

    def _report(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}"
        if detail:
            line += f"  [{detail}]"
        _VERDICTS.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)


def hetero_data(n=50, K=2, seed=0, a_h=1.0):
    """Intercept plus ``K - 1`` centered uniform covariates, noise sd ``exp(a_h x1 / 2)``."""
    rng = np.random.default_rng(seed)
    Z = rng.uniform(size=(n, K - 1))
    Z -= Z.mean(axis=0)
    y = 1.0 + Z.sum(axis=1) + np.exp(0.5 * a_h * Z[:, 0]) * rng.standard_normal(n)
    names = ["Intercept"] + [f"x{j}" for j in range(1, K)]
    return Dataset(y=y, X=np.column_stack([np.ones(n), Z]), column_names=names)


def ridge_design(data, mass_mode="normalized"):
    return augment_ridge(cluster_rows(data), RidgeBaseline.unit(data.K), mass_mode=mass_mode)


@pytest.fixture
def small_design():
    return ridge_design(hetero_data(n=30, K=3, seed=7))
