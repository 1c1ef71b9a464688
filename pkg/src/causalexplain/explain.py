"""Predictor importances: coefficients, impurity decrease and exact Shapley values.

Shapley values use the marginal (interventional) value function

    v(S) = mean_b f(x_S, b_notS)

over a background sample ``b``. :func:`shapley_exact` enumerates all 2^K
coalitions for any model. Forests additionally get
:func:`forest_shapley_values`, which computes the same numbers by walking each
tree once per (point, background row) pair: every leaf reachable by mixing the
two rows defines a game "features R must be taken from x, features Q from b",
whose Shapley values have a closed form.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numba
import numpy as np

from .data import Dataset, correlation
from .errors import (EmptyBackgroundError, TooManyFeaturesError, UntrainedError,
                     ValidationError)
from .models import LinearModel, RandomForest

MAX_ENUMERATED_FEATURES = 20
METHODS = ("LR-coefs", "RF-imps", "RF-Shap", "NN-Shap", "bi-corrs")


@dataclass(frozen=True)
class ImportanceReport:
    method: str
    raw: Mapping[str, float]
    normalized: Mapping[str, float]

    @property
    def predictors(self) -> tuple[str, ...]:
        return tuple(self.raw)

    def ranking(self) -> list[str]:
        """Predictors by decreasing raw importance (stable on ties)."""
        return sorted(self.raw, key=lambda p: -self.raw[p])

    def to_csv(self, header=True) -> str:
        buf = io.StringIO()
        if header:
            buf.write("method,predictor,raw,normalized\n")
        for p in self.raw:
            buf.write(f"{self.method},{p},{self.raw[p]!r},{self.normalized[p]!r}\n")
        return buf.getvalue()


def make_report(method: str, raw: Mapping[str, float]) -> ImportanceReport:
    """Attach range normalization: (raw - min) / (max - min), or all zeros when flat."""
    raw = {p: float(v) for p, v in raw.items()}
    if not raw:
        raise ValidationError("an importance report needs at least one predictor")
    lo, hi = min(raw.values()), max(raw.values())
    if hi > lo:
        norm = {p: (v - lo) / (hi - lo) for p, v in raw.items()}
    else:
        norm = {p: 0.0 for p in raw}
    return ImportanceReport(method, raw, norm)


def coef_report(model: LinearModel, predictors: Sequence[str] | None = None) -> ImportanceReport:
    predictors = list(predictors or model.predictors)
    return make_report("LR-coefs", {p: abs(model.coefficients[p]) for p in predictors})


def impurity_importances(forest: RandomForest, predictors: Sequence[str] | None = None
                         ) -> ImportanceReport:
    """Mean decrease in impurity, averaged over trees and rescaled to sum to one."""
    if not isinstance(forest, RandomForest) or not forest.trees:
        raise UntrainedError("impurity importances need a trained random forest")
    predictors = list(predictors or forest.predictors)
    if set(predictors) != set(forest.predictors):
        raise ValidationError("predictors must match the forest's training predictors")
    total = np.zeros(len(forest.predictors))
    for tree in forest.trees:
        total += tree.impurity_decrease()
    total /= len(forest.trees)
    s = total.sum()
    if s > 0:
        total = total / s
    by_name = dict(zip(forest.predictors, total))
    return make_report("RF-imps", {p: by_name[p] for p in predictors})


def correlation_report(ds: Dataset, outcome: str, predictors: Sequence[str]) -> ImportanceReport:
    """Absolute bivariate Pearson correlation of each predictor with the outcome."""
    y = ds.column(outcome)
    return make_report("bi-corrs", {p: abs(correlation(ds.column(p), y)) for p in predictors})


# -- Shapley values ---------------------------------------------------------

def _shapley_weights(k):
    # weight of a coalition of size s not containing the player
    return np.array([math.factorial(s) * math.factorial(k - s - 1) / math.factorial(k)
                     for s in range(k)])


def _as_function(model):
    return model.predict_matrix if hasattr(model, "predict_matrix") else model


def _background_matrix(model, background):
    if isinstance(background, Dataset):
        names = getattr(model, "predictors", None)
        bg = background.matrix(names) if names is not None else background.values
    else:
        bg = np.asarray(background, dtype=np.float64)
    if bg.ndim != 2 or bg.shape[0] == 0:
        raise EmptyBackgroundError("background must contain at least one row")
    return bg


class _CoalitionTable:
    def __init__(self, k):
        self.k = k
        masks = np.arange(1 << k)
        self.bits = ((masks[:, None] >> np.arange(k)) & 1).astype(bool)
        sizes = self.bits.sum(axis=1)
        w = _shapley_weights(k)
        self.without = []
        for j in range(k):
            m = masks[~self.bits[:, j]]
            self.without.append((m, m | (1 << j), w[sizes[m]]))

    def attribute(self, v):
        return np.array([wj @ (v[with_j] - v[wo]) for wo, with_j, wj in self.without])


def _coalition_values(f, table, point, bg):
    b, k = bg.shape
    hybrid = np.where(table.bits[:, None, :], point[None, None, :], bg[None, :, :])
    out = np.asarray(f(hybrid.reshape(-1, k)), dtype=np.float64)
    return out.reshape(1 << k, b).mean(axis=1)


def shapley_exact(model, point, background) -> np.ndarray:
    """Shapley values of one point by enumerating every coalition.

    ``model`` is a fitted model (columns in ``model.predictors`` order) or a
    callable on an (n, K) array; ``background`` a Dataset or (n, K) array.
    """
    point = np.asarray(point, dtype=np.float64).ravel()
    k = point.shape[0]
    if k > MAX_ENUMERATED_FEATURES:
        raise TooManyFeaturesError(f"{k} features exceed the enumeration bound "
                                   f"{MAX_ENUMERATED_FEATURES}")
    bg = _background_matrix(model, background)
    if bg.shape[1] != k:
        raise ValidationError("background and point have different widths")
    table = _CoalitionTable(k)
    return table.attribute(_coalition_values(_as_function(model), table, point, bg))


@dataclass(frozen=True)
class ShapleyMatrix:
    """Per-point attributions; row i satisfies sum(values[i]) + baseline = predictions[i]."""

    predictors: tuple[str, ...]
    values: np.ndarray
    baseline: float
    predictions: np.ndarray

    @property
    def signed_mean(self) -> np.ndarray:
        return self.values.mean(axis=0)

    @property
    def mean_abs(self) -> np.ndarray:
        return np.abs(self.values).mean(axis=0)

    def efficiency_gap(self) -> np.ndarray:
        return self.values.sum(axis=1) + self.baseline - self.predictions


def shapley_values(model, points, background, method="auto") -> ShapleyMatrix:
    """Shapley matrix for many points.

    ``method`` is ``"enumerate"`` (coalition enumeration, any model), ``"tree"``
    (forests only) or ``"auto"`` (tree for forests, enumeration otherwise).
    """
    names = tuple(getattr(model, "predictors", ()))
    x = points.matrix(names) if isinstance(points, Dataset) else np.asarray(points, np.float64)
    x = np.atleast_2d(x)
    bg = _background_matrix(model, background)
    k = x.shape[1]
    if bg.shape[1] != k:
        raise ValidationError("background and points have different widths")
    if k > MAX_ENUMERATED_FEATURES:
        raise TooManyFeaturesError(f"{k} features exceed the bound {MAX_ENUMERATED_FEATURES}")
    f = _as_function(model)
    if method == "auto":
        method = "tree" if isinstance(model, RandomForest) else "enumerate"
    if method == "tree":
        if not isinstance(model, RandomForest):
            raise ValidationError("the tree method needs a RandomForest")
        values = forest_shapley_values(model, x, bg)
    elif method == "enumerate":
        table = _CoalitionTable(k)
        values = np.empty_like(x)
        for i in range(x.shape[0]):
            values[i] = table.attribute(_coalition_values(f, table, x[i], bg))
    else:
        raise ValidationError(f"unknown Shapley method {method!r}")
    baseline = float(np.mean(f(bg)))
    return ShapleyMatrix(names, values, baseline, np.asarray(f(x), dtype=np.float64))


def shapley_report(model, test: Dataset, background: Dataset, predictors: Sequence[str],
                   method_label: str, method="auto") -> tuple[ShapleyMatrix, ImportanceReport]:
    """Mean absolute Shapley value per predictor over the rows of ``test``."""
    predictors = list(predictors)
    if list(model.predictors) != predictors:
        if set(model.predictors) != set(predictors):
            raise ValidationError("predictors must match the model's predictors")
    sm = shapley_values(model, test, background, method=method)
    by_name = dict(zip(sm.predictors, sm.mean_abs))
    return sm, make_report(method_label, {p: by_name[p] for p in predictors})


@numba.njit(cache=True)
def _tree_paths(feature, threshold, left, right, value, x, bg, w_in, w_out, phi):
    n_nodes = feature.shape[0]
    k = x.shape[1]
    s_node = np.empty(n_nodes + 1, np.int64)
    s_in = np.empty(n_nodes + 1, np.int64)
    s_out = np.empty(n_nodes + 1, np.int64)
    for i in range(x.shape[0]):
        for b in range(bg.shape[0]):
            top = 1
            s_node[0] = 0
            s_in[0] = 0
            s_out[0] = 0
            while top > 0:
                top -= 1
                node = s_node[top]
                req_in = s_in[top]
                req_out = s_out[top]
                f = feature[node]
                if f < 0:
                    r = 0
                    q = 0
                    for j in range(k):
                        if (req_in >> j) & 1:
                            r += 1
                        elif (req_out >> j) & 1:
                            q += 1
                    if r + q == 0:
                        continue
                    w = value[node]
                    for j in range(k):
                        if (req_in >> j) & 1:
                            phi[i, j] += w * w_in[r, q]
                        elif (req_out >> j) & 1:
                            phi[i, j] -= w * w_out[r, q]
                    continue
                x_left = x[i, f] <= threshold[node]
                b_left = bg[b, f] <= threshold[node]
                x_child = left[node] if x_left else right[node]
                if x_left == b_left:
                    s_node[top] = x_child
                    s_in[top] = req_in
                    s_out[top] = req_out
                    top += 1
                    continue
                b_child = left[node] if b_left else right[node]
                bit = np.int64(1) << f
                if req_in & bit:
                    s_node[top] = x_child
                    s_in[top] = req_in
                    s_out[top] = req_out
                    top += 1
                elif req_out & bit:
                    s_node[top] = b_child
                    s_in[top] = req_in
                    s_out[top] = req_out
                    top += 1
                else:
                    s_node[top] = x_child
                    s_in[top] = req_in | bit
                    s_out[top] = req_out
                    top += 1
                    s_node[top] = b_child
                    s_in[top] = req_in
                    s_out[top] = req_out | bit
                    top += 1


def _leaf_game_weights(k):
    # Shapley value of a player in R (resp. Q) for u(S) = [R in S and Q disjoint from S]
    w_in = np.zeros((k + 1, k + 1))
    w_out = np.zeros((k + 1, k + 1))
    for r in range(k + 1):
        for q in range(k + 1 - r):
            if r + q == 0:
                continue
            total = math.factorial(r + q)
            if r > 0:
                w_in[r, q] = math.factorial(r - 1) * math.factorial(q) / total
            if q > 0:
                w_out[r, q] = math.factorial(r) * math.factorial(q - 1) / total
    return w_in, w_out


def forest_shapley_values(forest: RandomForest, x: np.ndarray, background: np.ndarray
                          ) -> np.ndarray:
    """Exact marginal Shapley values of a forest, shape (len(x), K)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    bg = np.ascontiguousarray(background, dtype=np.float64)
    k = x.shape[1]
    if bg.shape[0] == 0:
        raise EmptyBackgroundError("background must contain at least one row")
    if k > 62:
        raise TooManyFeaturesError("tree path attribution supports at most 62 features")
    w_in, w_out = _leaf_game_weights(k)
    phi = np.zeros_like(x)
    for tree in forest.trees:
        _tree_paths(tree.feature, tree.threshold, tree.left, tree.right, tree.value,
                    x, bg, w_in, w_out, phi)
    return phi / (len(forest.trees) * bg.shape[0])
