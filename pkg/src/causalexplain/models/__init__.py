"""Regressors sharing one prediction contract.

Every model exposes ``predictors`` (tuple of column names) and
``predict_matrix(x)`` for an array whose columns follow ``predictors``;
:func:`predict` adds lookup by column name.
"""

import numpy as np

from ..data import Dataset
from ..errors import LengthMismatchError, MissingPredictorError
from .config import FitConfig, ForestConfig, MlpConfig
from .forest import RandomForest, fit_forest, fit_tree
from .linear import LinearModel, fit_ols
from .mlp import Mlp, fit_mlp, init_mlp, loss_and_grad
from .tree import DecisionTree, Leaf, Split, grow_tree


def predict(model, rows: Dataset) -> np.ndarray:
    missing = [p for p in model.predictors if p not in rows.columns]
    if missing:
        raise MissingPredictorError(f"rows lack predictors {missing}")
    return model.predict_matrix(rows.matrix(model.predictors))


def mse(yhat, y) -> float:
    yhat = np.asarray(yhat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if yhat.shape != y.shape or yhat.size < 1:
        raise LengthMismatchError(f"cannot compare shapes {yhat.shape} and {y.shape}")
    r = yhat - y
    return float(r @ r) / r.size


__all__ = [
    "DecisionTree", "FitConfig", "ForestConfig", "Leaf", "LinearModel", "Mlp", "MlpConfig",
    "RandomForest", "Split", "fit_forest", "fit_mlp", "fit_ols", "fit_tree", "grow_tree",
    "init_mlp", "loss_and_grad", "mse", "predict",
]
