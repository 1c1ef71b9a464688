from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigError


@dataclass(frozen=True)
class ForestConfig:
    # scikit-learn regression defaults: 100 fully grown trees, every feature
    # considered at every split
    n_trees: int = 100
    min_leaf: int = 1
    max_features: float = 1.0
    max_depth: int | None = None
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1 or self.min_leaf < 1:
            raise ConfigError("n_trees and min_leaf must be >= 1")
        if not 0.0 < self.max_features <= 1.0:
            raise ConfigError("max_features must lie in (0, 1]")
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")


@dataclass(frozen=True)
class MlpConfig:
    hidden: int = 100
    layers: int = 2
    lr0: float = 1e-3
    iterations: int = 200
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    # learning rate is halved after `patience` steps without a loss improvement
    # of at least `tol`, never dropping below `lr_min`
    patience: int = 10
    tol: float = 1e-4
    lr_min: float = 1e-6
    batch_size: int | None = None

    def __post_init__(self):
        if self.hidden < 1 or self.layers < 1:
            raise ConfigError("hidden and layers must be >= 1")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if not self.lr0 > 0:
            raise ConfigError("lr0 must be > 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")


@dataclass(frozen=True)
class FitConfig:
    forest: ForestConfig = field(default_factory=ForestConfig)
    mlp: MlpConfig = field(default_factory=MlpConfig)
