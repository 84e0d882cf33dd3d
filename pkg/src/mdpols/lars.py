"""Least Angle Regression (the plain LAR variant, no lasso modification)."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .validation import as_matrix, as_vector

RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LarsPath:
    """Breakpoints of a LAR path.

    ``steps[k]`` is ``(active, coef)`` with ``k`` active columns; ``active``
    is in order of entry. ``truncated`` is set when the path stopped early on
    a rank-deficient active set.
    """

    steps: list
    entered: list
    correlations: list = field(default_factory=list)
    truncated: bool = False

    @property
    def coefs(self):
        return np.array([c for _, c in self.steps])

    def active_sets(self):
        return [tuple(a) for a, _ in self.steps]


def lars_path(Xs, ys):
    """Run LAR on standardized ``Xs`` (columns mean 0) and centered ``ys``.

    Ties for the largest correlation go to the lowest column index.
    ``correlations[k]`` holds ``Xs' r`` at breakpoint ``k``.
    """
    X = as_matrix(Xs, name="Xs")
    y = as_vector(ys, name="ys", length=X.shape[0])
    n, p = X.shape
    beta = np.zeros(p)
    mu = np.zeros(n)
    c = X.T @ y
    steps = [((), beta.copy())]
    corrs = [c.copy()]
    active = [int(np.argmax(np.abs(c)))]
    truncated = False

    while True:
        A = np.array(active)
        s = np.sign(c[A])
        s[s == 0] = 1.0
        XA = X[:, A] * s
        GA = XA.T @ XA
        ev = np.linalg.eigvalsh(GA)
        if ev[0] <= RANK_TOL * max(ev[-1], 1.0):
            warnings.warn(f"LARS stopped at {len(active) - 1} active columns: "
                          "active set is rank deficient", RuntimeWarning, stacklevel=2)
            truncated = True
            active.pop()
            break
        Ginv1 = np.linalg.solve(GA, np.ones(len(A)))
        AA = 1.0 / np.sqrt(Ginv1.sum())
        w = AA * Ginv1
        u = XA @ w
        a = X.T @ u
        C = np.max(np.abs(c[A]))

        gamma = C / AA
        nxt = None
        if len(active) < p:
            floor = 1e-12 * C
            for j in range(p):
                if j in active:
                    continue
                for cand in ((C - c[j]) / (AA - a[j]), (C + c[j]) / (AA + a[j])):
                    if floor < cand < gamma:
                        gamma, nxt = cand, j
        mu = mu + gamma * u
        beta[A] += gamma * w * s
        c = X.T @ (y - mu)
        steps.append((tuple(active), beta.copy()))
        corrs.append(c.copy())
        if nxt is None:
            break
        active.append(nxt)

    return LarsPath(steps=steps, entered=list(active), correlations=corrs,
                    truncated=truncated)
