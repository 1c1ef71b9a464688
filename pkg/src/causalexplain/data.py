"""Dataset container, standardization, splitting and Pearson correlation."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _rng
from ._special import student_t_two_sided_p
from .errors import (ConstantColumnError, DuplicateError, EmptySplitError,
                     InsufficientSamplesError, MissingPredictorError, ValidationError)


class Dataset:
    """An N x d table of finite floats with named columns.

    The value matrix is stored read-only; transformations return new datasets.
    """

    __slots__ = ("columns", "values", "_index")

    def __init__(self, columns: Sequence[str], values):
        columns = tuple(columns)
        values = np.array(values, dtype=np.float64, copy=True)
        if values.ndim == 1 and len(columns) == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[1] != len(columns):
            raise ValidationError(
                f"value matrix of shape {values.shape} does not match {len(columns)} columns")
        if len(set(columns)) != len(columns):
            raise DuplicateError("column names must be unique")
        if values.shape[0] < 1:
            raise ValidationError("a dataset needs at least one row")
        if not np.all(np.isfinite(values)):
            raise ValidationError("dataset values must be finite")
        values.setflags(write=False)
        self.columns = columns
        self.values = values
        self._index = {c: i for i, c in enumerate(columns)}

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def __len__(self):
        return self.values.shape[0]

    def __repr__(self):
        return f"Dataset({self.n_rows} rows, columns={list(self.columns)})"

    def __eq__(self, other):
        return (isinstance(other, Dataset) and self.columns == other.columns
                and np.array_equal(self.values, other.values))

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self._index[name]]
        except KeyError:
            raise MissingPredictorError(f"dataset has no column {name!r}") from None

    def matrix(self, names: Iterable[str]) -> np.ndarray:
        """Columns ``names`` as a fresh (N, len(names)) array, looked up by name."""
        names = list(names)
        missing = [n for n in names if n not in self._index]
        if missing:
            raise MissingPredictorError(f"dataset lacks columns {missing}")
        return self.values[:, [self._index[n] for n in names]]

    def select(self, names: Iterable[str]) -> "Dataset":
        names = list(names)
        return Dataset(names, self.matrix(names))

    def take(self, rows) -> "Dataset":
        return Dataset(self.columns, self.values[np.asarray(rows)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.values:
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Dataset":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValidationError("empty CSV")
        header = [h.strip() for h in lines[0].split(",")]
        try:
            rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
        except ValueError as exc:
            raise ValidationError(f"non-numeric CSV value: {exc}") from None
        if any(len(r) != len(header) for r in rows):
            raise ValidationError("CSV rows do not match the header width")
        return cls(header, np.array(rows, dtype=np.float64).reshape(len(rows), len(header)))


@dataclass(frozen=True)
class Standardizer:
    """Per-column affine map to zero mean and unit sample std (N - 1)."""

    columns: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def transform(self, ds: Dataset) -> Dataset:
        x = ds.matrix(self.columns)
        return Dataset(self.columns, (x - self.mean) / self.std)

    def inverse(self, ds: Dataset) -> Dataset:
        x = ds.matrix(self.columns)
        return Dataset(self.columns, x * self.std + self.mean)


def standardize(ds: Dataset) -> tuple[Dataset, Standardizer]:
    if ds.n_rows < 2:
        raise ConstantColumnError("standardization needs at least two rows")
    mean = ds.values.mean(axis=0)
    std = ds.values.std(axis=0, ddof=1)
    flat = [c for c, s in zip(ds.columns, std) if not s > 0]
    if flat:
        raise ConstantColumnError(f"zero-variance columns: {flat}")
    z = Standardizer(ds.columns, mean, std)
    return z.transform(ds), z


def split(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then the first floor(fraction * N) rows train, the rest test.

    Rows keep their original relative order inside each part.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError("train_fraction must lie in (0, 1)")
    n = ds.n_rows
    n_train = int(math.floor(train_fraction * n))
    if n_train < 1 or n - n_train < 1:
        raise EmptySplitError(f"splitting {n} rows at {train_fraction} leaves an empty part")
    perm = _rng.generator(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return ds.take(train_idx), ds.take(test_idx)


def correlation(x: np.ndarray, y: np.ndarray) -> float:
    """Sample Pearson correlation of two vectors, clipped to [-1, 1]."""
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx <= 0.0 or syy <= 0.0:
        raise ConstantColumnError("correlation is undefined for a constant column")
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def pearson(ds: Dataset, x: str, y: str) -> tuple[float, float]:
    """Pearson r and its two-sided p-value from Student's t with N - 2 df."""
    n = ds.n_rows
    if n < 3:
        raise InsufficientSamplesError("pearson needs at least three rows")
    if x == y:
        xv = ds.column(x)
        if np.ptp(xv) == 0:
            raise ConstantColumnError(f"column {x!r} is constant")
        return 1.0, 0.0
    r = correlation(ds.column(x), ds.column(y))
    df = n - 2
    if abs(r) >= 1.0:
        return r, 0.0
    t = r * math.sqrt(df / (1.0 - r * r))
    return r, student_t_two_sided_p(t, df)


def format_rp(r: float, p: float) -> str:
    """Render ``r(p)`` without leading zeros, e.g. ``.92(.00)`` or ``-.94(.00)``."""

    def short(v):
        s = f"{v:.2f}"
        if s.startswith("0."):
            s = s[1:]
        elif s.startswith("-0."):
            s = "-" + s[2:]
        return s

    return f"{short(r)}({'.00' if p < 5e-3 else short(p)})"
