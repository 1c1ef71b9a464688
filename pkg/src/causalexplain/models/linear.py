from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..data import Dataset
from ..errors import RankDeficiencyError


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    coefficients: Mapping[str, float]

    @property
    def predictors(self) -> tuple[str, ...]:
        return tuple(self.coefficients)

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        beta = np.array([self.coefficients[p] for p in self.predictors])
        return self.intercept + np.asarray(x, dtype=np.float64) @ beta


def _back_substitute(r, b):
    n = r.shape[0]
    out = np.zeros(n)
    for i in range(n - 1, -1, -1):
        out[i] = (b[i] - r[i, i + 1:] @ out[i + 1:]) / r[i, i]
    return out


def fit_ols(train: Dataset, outcome: str, predictors=None) -> LinearModel:
    """Least squares with intercept, solved through a Householder QR factorization.

    ``predictors`` defaults to every column except ``outcome``. A column is
    declared dependent when its diagonal entry of R falls below 1e-10 times the
    largest one.
    """
    if predictors is None:
        predictors = [c for c in train.columns if c != outcome]
    predictors = list(predictors)
    x = train.matrix(predictors)
    y = train.column(outcome)
    n, d = x.shape
    if n <= d + 1:
        raise RankDeficiencyError(f"{n} rows cannot identify {d} coefficients plus intercept")
    design = np.column_stack([np.ones(n), x])
    q, r = np.linalg.qr(design, mode="reduced")
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-10 * diag.max():
        bad = [(["intercept"] + predictors)[i] for i in np.flatnonzero(diag <= 1e-10 * diag.max())]
        raise RankDeficiencyError(f"design matrix is rank deficient near {bad}")
    beta = _back_substitute(r, q.T @ y)
    return LinearModel(float(beta[0]), {p: float(b) for p, b in zip(predictors, beta[1:])})
