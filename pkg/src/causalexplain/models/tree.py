"""CART regression trees on squared error.

Trees are grown greedily with presorted index lists: every node owns the same
slice ``[start, end)`` of one sorted index row per feature, and a split stably
partitions each row, so no node ever re-sorts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np

from ..data import Dataset
from ..errors import EmptyFeatureError, ValidationError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@numba.njit(cache=True)
def _splitmix(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def _grow(x, y, features, min_leaf, max_depth, n_try, seed):
    n, d = x.shape
    n_feat = features.shape[0]
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap)
    impurity = np.zeros(cap)
    count = np.zeros(cap, np.int64)

    order = np.empty((n_feat, n), np.int64)
    for k in range(n_feat):
        order[k] = np.argsort(x[:, features[k]], kind="mergesort")
    buf = np.empty(n, np.int64)
    goes_left = np.zeros(n, np.bool_)
    state = np.empty(1, np.uint64)
    state[0] = np.uint64(seed)
    cand = np.arange(n_feat)

    stack = np.empty((cap, 4), np.int64)  # node, start, end, depth
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        m = end - start

        s = 0.0
        lo = np.inf
        hi = -np.inf
        for i in range(start, end):
            v = y[order[0, i]]
            s += v
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        mean = s / m
        sse = 0.0
        for i in range(start, end):
            r = y[order[0, i]] - mean
            sse += r * r
        value[node] = mean
        impurity[node] = sse / m
        count[node] = m
        if lo == hi or m < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue

        # features examined at this split, scanned in ascending index order
        if n_try < n_feat:
            for i in range(n_feat):
                cand[i] = i
            for i in range(n_try):
                j = i + np.int64(_splitmix(state) % np.uint64(n_feat - i))
                tmp = cand[i]
                cand[i] = cand[j]
                cand[j] = tmp
            chosen = np.sort(cand[:n_try])
        else:
            chosen = np.arange(n_feat)

        best_k = -1
        best_pos = -1
        best_proxy = -np.inf
        best_thr = 0.0
        for k in chosen:
            f = features[k]
            sl = 0.0
            for i in range(start, end - 1):
                idx = order[k, i]
                sl += y[idx]
                nl = i - start + 1
                nr = m - nl
                if nl < min_leaf:
                    continue
                if nr < min_leaf:
                    break
                xv = x[idx, f]
                xn = x[order[k, i + 1], f]
                if xv >= xn:
                    continue
                sr = s - sl
                proxy = sl * sl / nl + sr * sr / nr
                if proxy > best_proxy:
                    best_proxy = proxy
                    best_k = k
                    best_pos = i
                    thr = 0.5 * (xv + xn)
                    if thr >= xn:
                        thr = xv
                    best_thr = thr
        if best_k < 0:
            continue

        f = features[best_k]
        n_left = best_pos - start + 1
        for i in range(start, end):
            idx = order[best_k, i]
            goes_left[idx] = x[idx, f] <= best_thr
        for k in range(n_feat):
            a = start
            b = 0
            for i in range(start, end):
                idx = order[k, i]
                if goes_left[idx]:
                    order[k, a] = idx
                    a += 1
                else:
                    buf[b] = idx
                    b += 1
            for i in range(b):
                order[k, a + i] = buf[i]

        feature[node] = best_k
        threshold[node] = best_thr
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        # right pushed first so the left subtree is numbered depth-first
        stack[top, 0] = rnode
        stack[top, 1] = start + n_left
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = lnode
        stack[top, 1] = start
        stack[top, 2] = start + n_left
        stack[top, 3] = depth + 1
        top += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), impurity[:n_nodes].copy(),
            count[:n_nodes].copy())


@numba.njit(cache=True)
def _predict(x, feature, threshold, left, right, value):
    out = np.empty(x.shape[0])
    for r in range(x.shape[0]):
        node = 0
        while feature[node] >= 0:
            if x[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


class Split(NamedTuple):
    feature: str
    threshold: float
    left: int
    right: int
    impurity: float
    count: int


class Leaf(NamedTuple):
    weight: float
    count: int
    impurity: float


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Flat array encoding of a binary regression tree (node 0 is the root).

    ``feature[i]`` indexes ``predictors`` for split nodes and is -1 for leaves;
    rows with ``x[feature] <= threshold`` go left.
    """

    predictors: tuple[str, ...]
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    impurity: np.ndarray
    count: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def node(self, i: int):
        if self.feature[i] < 0:
            return Leaf(float(self.value[i]), int(self.count[i]), float(self.impurity[i]))
        return Split(self.predictors[self.feature[i]], float(self.threshold[i]),
                     int(self.left[i]), int(self.right[i]), float(self.impurity[i]),
                     int(self.count[i]))

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        return _predict(x, self.feature, self.threshold, self.left, self.right, self.value)

    def impurity_decrease(self) -> np.ndarray:
        """Per-predictor sum of count-weighted impurity decrease, over split nodes."""
        out = np.zeros(len(self.predictors))
        root = float(self.count[0])
        for i in np.flatnonzero(self.feature >= 0):
            l, r = self.left[i], self.right[i]
            n = self.count[i]
            child = (self.count[l] * self.impurity[l] + self.count[r] * self.impurity[r]) / n
            out[self.feature[i]] += n / root * (self.impurity[i] - child)
        return out


def grow_tree(x: np.ndarray, y: np.ndarray, predictors, *, min_leaf=1, max_depth=None,
              n_try=None, seed=0) -> DecisionTree:
    """Array-level tree induction; ``fit_tree`` is the dataset-level entry point."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, d = x.shape
    if n < 1:
        raise ValidationError("a tree needs at least one training row")
    if d < 1:
        raise EmptyFeatureError("a tree needs at least one feature")
    if min_leaf < 1:
        raise ValidationError("min_leaf must be >= 1")
    n_try = d if n_try is None else int(n_try)
    if not 1 <= n_try <= d:
        raise ValidationError(f"n_try must lie in [1, {d}]")
    arrays = _grow(x, y, np.arange(d, dtype=np.int64), int(min_leaf),
                   -1 if max_depth is None else int(max_depth), n_try,
                   np.uint64(int(seed) & ((1 << 64) - 1)))
    return DecisionTree(tuple(predictors), *arrays)
