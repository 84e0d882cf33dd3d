"""Datasets, clustering of tied rows, and the augmented design.

The augmented design stacks the distinct observed rows above a block of
imaginary rows that encode the baseline distribution of the Dirichlet
process.  Under the ridge baseline the imaginary block is deterministic
(``diag(v)**0.5`` with zero responses); under a general baseline it is a
Monte Carlo sample of ``S`` rows carrying fractional mass ``alpha / S`` each.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError
from .validation import as_matrix, as_vector, check_positive_int, check_random_state

MASS_MODES = ("per_row", "normalized")
DEFAULT_MASS_MODE = "normalized"


@dataclass(frozen=True)
class Dataset:
    """Response ``y`` (n,) and design ``X`` (n, K) with column names.

    When ``intercept`` is true the first column of ``X`` is exactly all ones.
    """

    y: np.ndarray
    X: np.ndarray
    column_names: tuple
    intercept: bool = True
    response_name: str = "y"

    def __post_init__(self):
        X = as_matrix(self.X)
        y = as_vector(self.y, length=X.shape[0])
        names = tuple(str(c) for c in self.column_names)
        if len(names) != X.shape[1]:
            raise ValueError(
                f"{len(names)} column names given for {X.shape[1]} columns")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names: {names}")
        if self.intercept and not np.all(X[:, 0] == 1.0):
            raise ValueError("intercept flag set but column 0 is not all ones")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def K(self):
        return self.X.shape[1]

    def column_index(self, name):
        try:
            return self.column_names.index(name)
        except ValueError:
            raise KeyError(f"no column named {name!r}; have {list(self.column_names)}") from None

    def select(self, columns):
        """Dataset restricted to the given column indices (order preserved)."""
        columns = list(columns)
        keep_intercept = self.intercept and columns[:1] == [0]
        return Dataset(
            y=self.y,
            X=self.X[:, columns],
            column_names=[self.column_names[j] for j in columns],
            intercept=keep_intercept,
            response_name=self.response_name,
        )


def load_dataset(path, response, intercept=True, columns=None):
    """Read a comma-separated file with a header row into a :class:`Dataset`.

    Parameters
    ----------
    path : str or path-like
    response : str
        Name of the response column.
    intercept : bool, default True
        Prepend a column of ones named ``"Intercept"``.
    columns : sequence of str, optional
        Covariates to keep, in this order. Defaults to every non-response
        column in file order.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise DataError("empty file", row=1)
    header = [h.strip() for h in rows[0]]
    for j, name in enumerate(header):
        if not name:
            raise DataError("missing column name", row=1, column=f"#{j + 1}")
    seen = set()
    for name in header:
        if name in seen:
            raise DataError("duplicate column name", row=1, column=name)
        seen.add(name)
    if response not in header:
        raise DataError(f"response column {response!r} not found", row=1)
    if columns is None:
        columns = [h for h in header if h != response]
    else:
        columns = list(columns)
        for name in columns:
            if name not in header:
                raise DataError("requested column not found", row=1, column=name)
            if name == response:
                raise DataError("response listed among covariates", row=1, column=name)
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if not body:
        raise DataError("file has a header but no data rows", row=2)

    values = np.empty((len(body), len(header)))
    k = 0
    # i is the 1-based line number in the file, for error messages
    for i, record in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in record):
            continue
        if len(record) != len(header):
            raise DataError(
                f"expected {len(header)} fields, found {len(record)}", row=i)
        for j, cell in enumerate(record):
            text = cell.strip()
            if not text:
                raise DataError("blank cell", row=i, column=header[j])
            try:
                value = float(text)
            except ValueError:
                raise DataError(f"non-numeric cell {text!r}", row=i, column=header[j]) from None
            if not math.isfinite(value):
                raise DataError(f"non-finite cell {text!r}", row=i, column=header[j])
            values[k, j] = value
        k += 1

    col_idx = [header.index(c) for c in columns]
    X = values[:, col_idx]
    names = list(columns)
    if intercept:
        X = np.column_stack([np.ones(len(body)), X])
        names = ["Intercept"] + names
    return Dataset(y=values[:, header.index(response)], X=X, column_names=names,
                   intercept=intercept, response_name=response)


@dataclass(frozen=True)
class ClusteredData:
    """Distinct ``(x, y)`` rows with their multiplicities."""

    rows: np.ndarray
    counts: np.ndarray
    column_names: tuple = ()
    intercept: bool = True

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] < 2:
            raise ValueError("rows must be (c_n, K + 1)")
        if counts.shape != (rows.shape[0],) or np.any(counts < 1):
            raise ValueError("counts must be positive integers, one per row")
        rows.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "counts", counts)

    @property
    def X(self):
        return self.rows[:, :-1]

    @property
    def y(self):
        return self.rows[:, -1]

    @property
    def n(self):
        return int(self.counts.sum())

    @property
    def c_n(self):
        return self.rows.shape[0]

    @property
    def K(self):
        return self.rows.shape[1] - 1

    def expand(self):
        """Original-size ``(X, y)`` with each row repeated by its count."""
        full = np.repeat(self.rows, self.counts, axis=0)
        return full[:, :-1], full[:, -1]


def cluster_rows(data):
    """Collapse exactly tied ``(x, y)`` rows, keeping first-occurrence order."""
    Z = np.column_stack([data.X, data.y])
    index = {}
    order = []
    counts = []
    for i, row in enumerate(map(tuple, Z)):
        c = index.get(row)
        if c is None:
            index[row] = len(order)
            order.append(i)
            counts.append(1)
        else:
            counts[c] += 1
    return ClusteredData(rows=Z[order], counts=np.array(counts),
                         column_names=data.column_names, intercept=data.intercept)


@dataclass(frozen=True)
class TransformRecord:
    """Column means and scales applied by :func:`standardize`.

    ``columns`` are the transformed covariate indices. ``y_mean``/``y_scale``
    are 0/1 unless the response was transformed too.
    """

    mode: str
    columns: tuple
    means: tuple
    scales: tuple
    y_mean: float = 0.0
    y_scale: float = 1.0

    def coef_to_original(self, beta):
        """Map coefficients fitted on transformed data back to original units.

        Assumes column 0 is the intercept when it is not among ``columns``.
        """
        beta = np.asarray(beta, dtype=np.float64).copy()
        out = beta * self.y_scale
        shift = 0.0
        for j, m, s in zip(self.columns, self.means, self.scales):
            out[j] = beta[j] * self.y_scale / s
            shift += out[j] * m
        if 0 not in self.columns:
            out[0] = beta[0] * self.y_scale + self.y_mean - shift
        return out

    def to_dict(self):
        return {
            "mode": self.mode,
            "columns": list(self.columns),
            "means": list(self.means),
            "scales": list(self.scales),
            "y_mean": self.y_mean,
            "y_scale": self.y_scale,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def standardize(data, mode="center", response=False):
    """Center (or z-score) every covariate column except the intercept.

    ``zscore`` divides by the sample standard deviation with divisor n - 1.
    Set ``response=True`` to transform ``y`` the same way.
    """
    if mode not in ("center", "zscore"):
        raise ValueError(f"mode must be 'center' or 'zscore', got {mode!r}")
    X = data.X.copy()
    y = data.y.copy()
    columns = [j for j in range(data.K) if not (data.intercept and j == 0)]

    def _scale(v, label):
        if mode == "center":
            return 1.0
        if v.shape[0] < 2:
            raise ValueError(f"zscore needs at least 2 rows ({label})")
        sd = float(np.std(v, ddof=1))
        if not sd > 0:
            raise ValueError(f"column {label!r} has zero variance; cannot z-score")
        return sd

    means, scales = [], []
    for j in columns:
        m = float(X[:, j].mean())
        s = _scale(X[:, j], data.column_names[j])
        X[:, j] = (X[:, j] - m) / s
        means.append(m)
        scales.append(s)
    y_mean, y_scale = 0.0, 1.0
    if response:
        y_mean = float(y.mean())
        y_scale = _scale(y, data.response_name)
        y = (y - y_mean) / y_scale
    out = Dataset(y=y, X=X, column_names=data.column_names, intercept=data.intercept,
                  response_name=data.response_name)
    record = TransformRecord(mode=mode, columns=tuple(columns), means=tuple(means),
                             scales=tuple(scales), y_mean=y_mean, y_scale=y_scale)
    return out, record


@dataclass(frozen=True)
class RidgeBaseline:
    """Diagonal baseline variances ``(0, v_2, ..., v_K)`` for the ridge prior."""

    variances: np.ndarray
    intercept: bool = True

    def __post_init__(self):
        v = as_vector(self.variances, name="variances")
        if np.any(v < 0):
            raise ValueError("ridge variances must be nonnegative")
        if self.intercept and v[0] != 0:
            raise ValueError("the intercept's ridge variance must be 0")
        v.setflags(write=False)
        object.__setattr__(self, "variances", v)

    @classmethod
    def unit(cls, K, intercept=True):
        v = np.ones(K)
        if intercept:
            v[0] = 0.0
        return cls(v, intercept=intercept)

    @property
    def is_unit(self):
        v = self.variances[1:] if self.intercept else self.variances
        return bool(np.all(v == 1.0))


@dataclass(frozen=True)
class AugmentedDesign:
    """Distinct observed rows stacked above ``S`` imaginary baseline rows.

    ``kind`` is ``"ridge"`` (deterministic diagonal block, ``S = K``) or
    ``"general"`` (Monte Carlo draws from the baseline). Each imaginary row
    carries prior mass ``alpha`` under ``per_row`` and ``alpha / S``
    under ``normalized``; general designs always use ``normalized``.
    """

    Xa: np.ndarray
    ya: np.ndarray
    counts: np.ndarray
    S: int
    kind: str = "ridge"
    imaginary_mass_mode: str = "normalized"
    column_names: tuple = field(default=())

    def __post_init__(self):
        Xa = as_matrix(self.Xa, name="Xa")
        ya = as_vector(self.ya, name="ya", length=Xa.shape[0])
        counts = np.asarray(self.counts, dtype=np.float64)
        if self.imaginary_mass_mode not in MASS_MODES:
            raise ValueError(f"imaginary_mass_mode must be one of {MASS_MODES}")
        if self.kind not in ("ridge", "general"):
            raise ValueError("kind must be 'ridge' or 'general'")
        if self.kind == "general" and self.imaginary_mass_mode != "normalized":
            raise ValueError("general-baseline designs use normalized imaginary mass")
        if counts.ndim != 1 or counts.shape[0] + self.S != Xa.shape[0]:
            raise ValueError("counts length plus S must equal the number of rows")
        if np.any(counts <= 0):
            raise ValueError("counts must be positive")
        for a in (Xa, ya, counts):
            a.setflags(write=False)
        object.__setattr__(self, "Xa", Xa)
        object.__setattr__(self, "ya", ya)
        object.__setattr__(self, "counts", counts)

    @property
    def c_n(self):
        return self.counts.shape[0]

    @property
    def n(self):
        return float(self.counts.sum())

    @property
    def K(self):
        return self.Xa.shape[1]

    @property
    def size(self):
        return self.Xa.shape[0]

    def imaginary_mass(self, alpha):
        """Prior mass carried by each imaginary row (before dividing by alpha + n)."""
        if self.S == 0:
            return 0.0
        if self.imaginary_mass_mode == "per_row":
            return float(alpha)
        return float(alpha) / self.S

    def prior_weights(self, alpha):
        """Row weights ``(n_1, ..., n_c, mass, ..., mass)`` of the augmented OLS."""
        return np.concatenate([self.counts, np.full(self.S, self.imaginary_mass(alpha))])

    def with_mass_mode(self, mode):
        return AugmentedDesign(self.Xa, self.ya, self.counts, self.S, self.kind, mode,
                               self.column_names)


def augment_ridge(cd, base, mass_mode=DEFAULT_MASS_MODE):
    """Stack ``diag(variances)**0.5`` (responses 0) below the distinct rows."""
    if base.variances.shape[0] != cd.K:
        raise ValueError(
            f"ridge baseline has {base.variances.shape[0]} variances for {cd.K} columns")
    imag = np.diag(np.sqrt(base.variances))
    return AugmentedDesign(
        Xa=np.vstack([cd.X, imag]),
        ya=np.concatenate([cd.y, np.zeros(cd.K)]),
        counts=cd.counts,
        S=cd.K,
        kind="ridge",
        imaginary_mass_mode=mass_mode,
        column_names=cd.column_names,
    )


def normal_baseline(mean, cov):
    """Row sampler for a multivariate normal baseline over ``(x, y)``."""
    mean = as_vector(mean, name="mean")
    cov = as_matrix(cov, name="cov")

    def sample(rng, size):
        return rng.multivariate_normal(mean, cov, size=size, method="eigh")

    return sample


def impute_general_baseline(cd, sampler, S, rng=None):
    """Draw ``S`` imaginary ``(x, y)`` rows from ``sampler(rng, S)``.

    Each row later carries fractional prior mass ``alpha / S``.
    """
    S = check_positive_int(S, "S")
    rng = check_random_state(rng)
    Z = np.asarray(sampler(rng, S), dtype=np.float64)
    if Z.shape != (S, cd.K + 1):
        raise ValueError(f"sampler returned shape {Z.shape}, expected {(S, cd.K + 1)}")
    if not np.all(np.isfinite(Z)):
        raise ValueError("baseline sampler produced a non-finite row")
    return AugmentedDesign(
        Xa=np.vstack([cd.X, Z[:, :-1]]),
        ya=np.concatenate([cd.y, Z[:, -1]]),
        counts=cd.counts,
        S=S,
        kind="general",
        imaginary_mass_mode="normalized",
        column_names=cd.column_names,
    )
