"""Fully connected ReLU network for regression, trained with Adam on MSE."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import _rng
from ..data import Dataset
from ..errors import DivergenceError, ValidationError
from .config import FitConfig, MlpConfig


@dataclass(eq=False)
class Mlp:
    """Weights ``W[i]`` have shape (fan_in, fan_out); the last layer is linear
    with a single output.
    """

    predictors: tuple[str, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"
    loss_history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lr_history: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValidationError("weights and biases must pair up")
        fan_in = len(self.predictors)
        for w, b in zip(self.weights, self.biases):
            if w.shape[0] != fan_in or b.shape != (w.shape[1],):
                raise ValidationError("layer dimensions do not chain")
            fan_in = w.shape[1]
        if fan_in != 1:
            raise ValidationError("the output layer must have width 1")

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        h = np.asarray(x, dtype=np.float64)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w
            h += b
            if i < last:
                np.maximum(h, 0.0, out=h)
        return h[:, 0]


def init_mlp(predictors, cfg: MlpConfig, seed: int) -> Mlp:
    """Zero biases; weights uniform on +-sqrt(6 / (fan_in + fan_out))."""
    gen = _rng.generator(seed)
    sizes = [len(predictors)] + [cfg.hidden] * cfg.layers + [1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(gen.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(tuple(predictors), weights, biases)


def loss_and_grad(model: Mlp, x: np.ndarray, y: np.ndarray):
    """Mean squared error and its gradient, ordered like ``model.params()``."""
    acts = [x]
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w + b
        if i < last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    resid = acts[-1][:, 0] - y
    n = x.shape[0]
    loss = float(resid @ resid) / n

    delta = (2.0 / n) * resid[:, None]
    grads = [None] * (2 * len(model.weights))
    for i in range(last, -1, -1):
        grads[2 * i] = acts[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0.0)
    return loss, grads


def fit_mlp(train: Dataset, outcome: str, cfg: FitConfig | None = None, seed: int = 0,
            predictors=None) -> Mlp:
    """Adam on mean squared error for ``cfg.mlp.iterations`` steps.

    With ``batch_size`` unset every step sees the whole training set. The
    learning rate starts at ``lr0`` and is halved whenever the loss has failed
    to improve on its best value by ``tol`` for ``patience`` consecutive steps.
    """
    mc = (cfg or FitConfig()).mlp
    if predictors is None:
        predictors = [c for c in train.columns if c != outcome]
    predictors = list(predictors)
    if train.n_rows < 2:
        raise ValidationError("fit_mlp needs at least two rows")
    x = train.matrix(predictors)
    y = train.column(outcome).copy()
    model = init_mlp(predictors, mc, _rng.derive_seed(seed, "init"))
    params = model.params()
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    lr = mc.lr0
    best = np.inf
    stall = 0
    losses = np.zeros(mc.iterations)
    lrs = np.zeros(mc.iterations)
    n = x.shape[0]
    batch = n if mc.batch_size is None else min(mc.batch_size, n)
    order_gen = _rng.generator(_rng.derive_seed(seed, "batches"))
    order = np.arange(n)
    pos = n
    for step in range(mc.iterations):
        if batch == n:
            xb, yb = x, y
        else:
            if pos + batch > n:
                order = order_gen.permutation(n)
                pos = 0
            rows = order[pos:pos + batch]
            pos += batch
            xb, yb = x[rows], y[rows]
        loss, grads = loss_and_grad(model, xb, yb)
        if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
            raise DivergenceError(f"training loss became non-finite at step {step}")
        losses[step] = loss
        lrs[step] = lr
        t = step + 1
        corr1 = 1.0 - mc.adam_beta1 ** t
        corr2 = 1.0 - mc.adam_beta2 ** t
        for p, g, mi, vi in zip(params, grads, m, v):
            mi *= mc.adam_beta1
            mi += (1.0 - mc.adam_beta1) * g
            vi *= mc.adam_beta2
            vi += (1.0 - mc.adam_beta2) * g * g
            p -= lr * (mi / corr1) / (np.sqrt(vi / corr2) + mc.adam_eps)
        if loss < best - mc.tol:
            best = loss
            stall = 0
        else:
            stall += 1
            if stall >= mc.patience:
                lr = max(lr * 0.5, mc.lr_min)
                stall = 0
    model.loss_history = losses
    model.lr_history = lrs
    return model
