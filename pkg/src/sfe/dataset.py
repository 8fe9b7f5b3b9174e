"""Tabular dataset container and signed-hypercube normalization.

Covariates are mapped column-wise onto [-1, +1] (column minimum to -1,
maximum to +1) and the outcome onto [0, 1], so that pairwise outcome gaps
are commensurate with normalized dot products downstream.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

COLUMN_KINDS = ("binary", "ordinal", "continuous")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Column:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in COLUMN_KINDS:
            raise ValueError(f"unknown column kind {self.kind!r} for {self.name!r}")


@dataclass(frozen=True)
class Dataset:
    """Raw observation matrix, outcome vector and column metadata.

    Immutable after construction; entries equal to ``missing_code`` are
    treated as absent covariate values.
    """

    columns: tuple[Column, ...]
    X: np.ndarray
    y: np.ndarray
    missing_code: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "X", _frozen(np.atleast_2d(self.X)))
        object.__setattr__(self, "y", _frozen(np.ravel(self.y)))
        n, m = self.X.shape
        if n < 2:
            raise ValueError(f"dataset needs at least 2 rows, got {n}")
        if m < 1:
            raise ValueError("dataset needs at least 1 column")
        if len(self.columns) != m:
            raise ValueError(f"{len(self.columns)} column names for {m} columns")
        if self.y.shape[0] != n:
            raise ValueError(f"outcome length {self.y.shape[0]} != {n} rows")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique")
        for j, col in enumerate(self.columns):
            if col.kind == "binary":
                vals = np.unique(self.X[self._present(j), j])
                if vals.size != 2:
                    raise ValueError(
                        f"binary column {col.name!r} has {vals.size} distinct "
                        "non-missing values, expected exactly 2"
                    )

    def _present(self, j: int) -> np.ndarray:
        if self.missing_code is None:
            return np.ones(self.X.shape[0], dtype=bool)
        return self.X[:, j] != self.missing_code

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise ValueError(f"unknown column {name!r}") from None


@dataclass(frozen=True)
class NormalizedData:
    """Unity-base normalized data plus the scaling records for round trips."""

    Xn: np.ndarray
    yn: np.ndarray
    x_min: np.ndarray
    x_max: np.ndarray
    y_min: float
    y_max: float

    def __post_init__(self):
        for name in ("Xn", "yn", "x_min", "x_max"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def n(self) -> int:
        return self.Xn.shape[0]

    @property
    def m(self) -> int:
        return self.Xn.shape[1]

    @property
    def y_range(self) -> float:
        return self.y_max - self.y_min

    def scaling(self) -> dict:
        return {
            "x_min": self.x_min.tolist(),
            "x_max": self.x_max.tolist(),
            "y_min": self.y_min,
            "y_max": self.y_max,
        }


def unity_normalize(d: Dataset) -> NormalizedData:
    """Map covariates onto [-1, +1] per column and the outcome onto [0, 1].

    Constant columns map to all zeros, and missing-coded entries map to 0
    (the uncertain-status midpoint). Raises ValueError on a constant outcome.
    """
    X = d.X
    n, m = X.shape
    missing = np.zeros_like(X, dtype=bool)
    if d.missing_code is not None:
        missing = X == d.missing_code
    Xv = np.where(missing, np.nan, X)
    with np.errstate(invalid="ignore"):
        x_min = np.nanmin(np.where(np.all(missing, axis=0), 0.0, Xv), axis=0)
        x_max = np.nanmax(np.where(np.all(missing, axis=0), 0.0, Xv), axis=0)
    span = x_max - x_min
    Xn = np.zeros_like(X)
    nonconst = span > 0
    Xn[:, nonconst] = 2.0 * (X[:, nonconst] - x_min[nonconst]) / span[nonconst] - 1.0
    Xn[missing] = 0.0

    y_min = float(np.min(d.y))
    y_max = float(np.max(d.y))
    if y_max == y_min:
        raise ValueError("degenerate outcome: all outcome values are equal")
    yn = (d.y - y_min) / (y_max - y_min)
    return NormalizedData(Xn=Xn, yn=yn, x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max)


def denormalize_effect(v: float, nd: NormalizedData) -> float:
    """Rescale an effect from normalized outcome units to raw outcome units."""
    if not nd.y_max > nd.y_min:
        raise ValueError("degenerate outcome scaling")
    return float(v) * (nd.y_max - nd.y_min)


def infer_kind(values: np.ndarray, missing_code: Optional[float] = None) -> str:
    present = values if missing_code is None else values[values != missing_code]
    distinct = np.unique(present)
    if distinct.size == 2:
        return "binary"
    if distinct.size > 0 and np.all(distinct == np.round(distinct)):
        return "ordinal"
    return "continuous"


def read_csv_dataset(
    path: str,
    outcome: str,
    missing_code: Optional[float] = None,
    kinds: Optional[dict[str, str]] = None,
) -> Dataset:
    """Read an RFC-4180 CSV with a header row into a Dataset.

    The ``outcome`` column becomes y; all remaining columns become covariates
    in file order. Column kinds are inferred unless given in ``kinds``.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, header row required") from None
        if outcome not in header:
            raise ValueError(f"{path}: outcome column {outcome!r} not found in header")
        rows = []
        for r, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: row {r}: expected {len(header)} fields, got {len(row)}")
            parsed = []
            for c, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: row {r}, column {header[c]!r}: not a number: {cell!r}"
                    ) from None
            rows.append(parsed)
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 data rows, got {len(rows)}")
    data = np.asarray(rows, dtype=np.float64)
    y_idx = header.index(outcome)
    y = data[:, y_idx]
    keep = [j for j in range(len(header)) if j != y_idx]
    X = data[:, keep]
    names = [header[j] for j in keep]
    kinds = kinds or {}
    columns = tuple(
        Column(name, kinds.get(name, infer_kind(X[:, j], missing_code)))
        for j, name in enumerate(names)
    )
    return Dataset(columns=columns, X=X, y=y, missing_code=missing_code)


def write_csv_dataset(d: Dataset, path: str, outcome: str = "y") -> None:
    """Write a Dataset to the standard CSV schema (covariates then outcome)."""
    if outcome in d.column_names:
        raise ValueError(f"outcome name {outcome!r} collides with a covariate column")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.column_names) + [outcome])
        for i in range(d.n):
            writer.writerow([_fmt(v) for v in d.X[i]] + [_fmt(d.y[i])])


def _fmt(v: float) -> str:
    return format(float(v), ".17g")
