from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _rng
from ..data import Dataset
from ..errors import EmptyFeatureError
from .config import FitConfig, ForestConfig
from .tree import DecisionTree, grow_tree


def fit_tree(train: Dataset, outcome: str, cfg: FitConfig | None = None, feature_mask=None,
             seed: int = 0) -> DecisionTree:
    """One regression tree on ``feature_mask`` (default: all non-outcome columns).

    The forest settings of ``cfg`` control leaf size, depth and the number of
    features tried per split.
    """
    cfg = cfg or FitConfig()
    if feature_mask is None:
        predictors = [c for c in train.columns if c != outcome]
    else:
        mask = set(feature_mask)
        predictors = [c for c in train.columns if c in mask]
        missing = mask - set(predictors)
        if missing:
            raise EmptyFeatureError(f"feature_mask names unknown columns {sorted(missing)}")
    if not predictors:
        raise EmptyFeatureError("feature_mask selects no predictors")
    return _grow(train.matrix(predictors), train.column(outcome), predictors, cfg.forest, seed)


def _grow(x, y, predictors, fc: ForestConfig, seed):
    n_try = max(1, math.ceil(fc.max_features * len(predictors)))
    return grow_tree(x, y, predictors, min_leaf=fc.min_leaf, max_depth=fc.max_depth,
                     n_try=min(n_try, len(predictors)), seed=seed)


@dataclass(frozen=True, eq=False)
class RandomForest:
    predictors: tuple[str, ...]
    trees: tuple[DecisionTree, ...]
    tree_seeds: tuple[int, ...]
    config: ForestConfig

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        total = np.zeros(x.shape[0])
        for tree in self.trees:
            total += tree.predict_matrix(x)
        return total / len(self.trees)


def fit_forest(train: Dataset, outcome: str, cfg: FitConfig | None = None, seed: int = 0,
               predictors=None) -> RandomForest:
    """Bagged regression trees; prediction is the mean over trees.

    Tree ``t`` draws its bootstrap rows and split-feature subsets from a seed
    derived from ``(seed, t)`` alone, so trees are independent of build order.
    """
    cfg = cfg or FitConfig()
    fc = cfg.forest
    if predictors is None:
        predictors = [c for c in train.columns if c != outcome]
    predictors = list(predictors)
    if not predictors:
        raise EmptyFeatureError("no predictors to fit")
    x = train.matrix(predictors)
    y = train.column(outcome)
    n = x.shape[0]
    trees, seeds = [], []
    for t in range(fc.n_trees):
        tree_seed = _rng.derive_seed(seed, "tree", t)
        if fc.bootstrap:
            rows = _rng.generator(tree_seed).integers(0, n, size=n)
            xt, yt = x[rows], y[rows]
        else:
            xt, yt = x, y
        trees.append(_grow(xt, yt, predictors, fc, tree_seed))
        seeds.append(tree_seed)
    return RandomForest(tuple(predictors), tuple(trees), tuple(seeds), fc)
