"""Dataset container, CSV ingestion, standardization and covariance estimation.

All estimators in the package consume an :class:`ObservationalDataset`:
a dense covariate matrix, a binary treatment vector, an outcome vector,
and (for synthetic data only) the true potential outcomes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg


class DataError(ValueError):
    """Raised for malformed input data (bad CSV, non-binary treatment, ...)."""


class NumericalError(RuntimeError):
    """Raised when a factorization or solve fails (singular covariance, ...)."""


CONTINUOUS = "continuous"
BINARY = "binary"


@dataclass(frozen=True)
class ObservationalDataset:
    """Immutable (X, T, Y) triple with optional true potential outcomes.

    X is n x p, T in {0,1}, Y real.  y1_true / y0_true are present only for
    synthetic data where the counterfactuals are known.
    """

    X: np.ndarray
    T: np.ndarray
    Y: np.ndarray
    y1_true: Optional[np.ndarray] = None
    y0_true: Optional[np.ndarray] = None
    column_names: Sequence[str] = field(default_factory=tuple)
    column_kinds: Sequence[str] = field(default_factory=tuple)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        T = np.asarray(self.T)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2:
            raise DataError("X must be a 2-d matrix")
        n, p = X.shape
        if n < 2 or p < 1:
            raise DataError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if not np.all(np.isfinite(X)):
            bad = np.argwhere(~np.isfinite(X))[0]
            raise DataError(f"non-finite covariate at row {bad[0]}, column {bad[1]}")
        if T.shape != (n,) or Y.shape != (n,):
            raise DataError("T and Y must be length-n vectors")
        if not np.all(np.isin(T, (0, 1))):
            bad = int(np.flatnonzero(~np.isin(T, (0, 1)))[0])
            raise DataError(f"non-binary treatment value at row {bad}")
        T = T.astype(int)
        if T.sum() == 0 or T.sum() == n:
            raise DataError("treatment vector must contain both 0 and 1")
        if (self.y1_true is None) != (self.y0_true is None):
            raise DataError("y1_true and y0_true must be supplied together")
        for name in ("y1_true", "y0_true"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != (n,):
                    raise DataError(f"{name} must have length n={n}")
                object.__setattr__(self, name, v)
        names = tuple(self.column_names) or tuple(f"x{j + 1}" for j in range(p))
        kinds = tuple(self.column_kinds) or tuple(infer_column_kinds(X))
        if len(names) != p or len(kinds) != p:
            raise DataError("column_names / column_kinds must have length p")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "column_kinds", kinds)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def treated(self) -> np.ndarray:
        return np.flatnonzero(self.T == 1)

    @property
    def controls(self) -> np.ndarray:
        return np.flatnonzero(self.T == 0)

    @property
    def has_truth(self) -> bool:
        return self.y1_true is not None


@dataclass(frozen=True)
class CovarianceModel:
    """Sample covariance with a ridge term, stored with its Cholesky factor."""

    sigma: np.ndarray
    ridge: float
    mean: np.ndarray
    cho: tuple = field(repr=False, default=None)

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve (sigma + ridge*I) x = b through the cached factorization."""
        return scipy.linalg.cho_solve(self.cho, b)


def infer_column_kinds(X: np.ndarray) -> list[str]:
    """Flag columns whose values all lie in {0, 1} as binary."""
    kinds = []
    for j in range(X.shape[1]):
        vals = np.unique(X[:, j])
        kinds.append(BINARY if np.all(np.isin(vals, (0.0, 1.0))) else CONTINUOUS)
    return kinds


def load_csv(path, schema: dict) -> ObservationalDataset:
    """Load a dataset from a headered CSV.

    ``schema`` maps roles to column names: ``t`` and ``y`` are required,
    ``y1`` / ``y0`` optional.  Every remaining column is a covariate.
    """
    t_col = schema.get("t")
    y_col = schema.get("y")
    if not t_col or not y_col:
        raise DataError("schema must name a treatment column (t) and an outcome column (y)")
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = list(reader)

    special = {t_col, y_col, schema.get("y1"), schema.get("y0")} - {None}
    for col in special:
        if col not in header:
            raise DataError(f"schema column {col!r} not found in header {header}")
    cov_cols = [c for c in header if c not in special]
    if not cov_cols:
        raise DataError("no covariate columns left after removing schema columns")

    idx = {c: header.index(c) for c in header}
    n = len(rows)
    if n == 0:
        raise DataError(f"{path}: no data rows")

    def cell(row_i, col):
        row = rows[row_i]
        if len(row) != len(header):
            raise DataError(f"row {row_i + 2}: expected {len(header)} fields, got {len(row)}")
        raw = row[idx[col]].strip()
        try:
            return float(raw)
        except ValueError:
            raise DataError(f"row {row_i + 2}, column {col!r}: non-numeric cell {raw!r}") from None

    X = np.array([[cell(i, c) for c in cov_cols] for i in range(n)])
    T_raw = np.array([cell(i, t_col) for i in range(n)])
    if not np.all(np.isin(T_raw, (0.0, 1.0))):
        bad = int(np.flatnonzero(~np.isin(T_raw, (0.0, 1.0)))[0])
        raise DataError(f"non-binary treatment value {T_raw[bad]!r} at row {bad + 2}")
    Y = np.array([cell(i, y_col) for i in range(n)])
    y1 = np.array([cell(i, schema["y1"]) for i in range(n)]) if schema.get("y1") else None
    y0 = np.array([cell(i, schema["y0"]) for i in range(n)]) if schema.get("y0") else None
    return ObservationalDataset(X=X, T=T_raw.astype(int), Y=Y, y1_true=y1, y0_true=y0,
                                column_names=cov_cols)


def write_csv(ds: ObservationalDataset, path, t_col="t", y_col="y") -> None:
    """Write a dataset back to CSV with repr-precision floats (round-trip safe)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = list(ds.column_names) + [t_col, y_col]
        if ds.has_truth:
            header += ["y1", "y0"]
        writer.writerow(header)
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.X[i]] + [str(int(ds.T[i])), repr(float(ds.Y[i]))]
            if ds.has_truth:
                row += [repr(float(ds.y1_true[i])), repr(float(ds.y0_true[i]))]
            writer.writerow(row)


@dataclass(frozen=True)
class StandardizeRecord:
    """Per-column shift/scale sufficient to invert the standardization."""

    mean: np.ndarray
    scale: np.ndarray


def standardize(ds: ObservationalDataset) -> tuple[ObservationalDataset, StandardizeRecord]:
    """Center/scale continuous columns to mean 0, sd 1 (n-1 denominator).

    Binary columns pass through untouched.  Raises on a zero-variance
    continuous column.
    """
    mean = np.zeros(ds.p)
    scale = np.ones(ds.p)
    X = ds.X.copy()
    for j, kind in enumerate(ds.column_kinds):
        if kind != CONTINUOUS:
            continue
        sd = ds.X[:, j].std(ddof=1)
        if sd <= 0:
            raise DataError(f"zero-variance continuous column {ds.column_names[j]!r}")
        mean[j] = ds.X[:, j].mean()
        scale[j] = sd
        X[:, j] = (ds.X[:, j] - mean[j]) / sd
    out = ObservationalDataset(X=X, T=ds.T, Y=ds.Y, y1_true=ds.y1_true, y0_true=ds.y0_true,
                               column_names=ds.column_names, column_kinds=ds.column_kinds)
    return out, StandardizeRecord(mean=mean, scale=scale)


def default_ridge(sigma: np.ndarray) -> float:
    """Scale-aware jitter: 1e-8 * trace(sigma) / p."""
    return 1e-8 * float(np.trace(sigma)) / sigma.shape[0]


def covariance(ds_or_X, ridge: Optional[float] = None) -> CovarianceModel:
    """Sample covariance (n-1 denominator) plus ridge, Cholesky-verified SPD."""
    X = ds_or_X.X if isinstance(ds_or_X, ObservationalDataset) else np.asarray(ds_or_X, float)
    if X.shape[0] < 2:
        raise DataError("covariance needs n >= 2")
    mean = X.mean(axis=0)
    sigma = np.cov(X, rowvar=False, ddof=1)
    sigma = np.atleast_2d(sigma)
    if ridge is None:
        ridge = default_ridge(sigma)
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    try:
        cho = scipy.linalg.cho_factor(sigma + ridge * np.eye(sigma.shape[0]))
    except np.linalg.LinAlgError:
        raise NumericalError(
            f"covariance not positive definite with ridge={ridge:g}; increase the ridge"
        ) from None
    except scipy.linalg.LinAlgError:
        raise NumericalError(
            f"covariance not positive definite with ridge={ridge:g}; increase the ridge"
        ) from None
    return CovarianceModel(sigma=sigma, ridge=float(ridge), mean=mean, cho=cho)
