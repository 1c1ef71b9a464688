"""End-to-end experiment: sample, standardize, split, fit, explain."""

from __future__ import annotations

import datetime
import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import _rng
from ..data import Dataset, split, standardize
from ..errors import ConfigError
from ..explain import (METHODS, ImportanceReport, ShapleyMatrix, coef_report,
                       correlation_report, impurity_importances, shapley_report)
from ..graph import d_separated, implied_independencies
from ..independence import fisher_z_ci
from ..models import FitConfig, fit_forest, fit_mlp, fit_ols, mse, predict
from ..scm import load_scm, sample

MASTER_SEED = 20220101
TRAIN_FRACTION = 0.6

# which fitted model each explanation method needs
_MODEL_OF = {"LR-coefs": "lr", "RF-imps": "rf", "RF-Shap": "rf", "NN-Shap": "mlp"}


@dataclass(frozen=True)
class ExperimentConfig:
    scm: str = "complex"
    n: int = 10_000
    seed: int = MASTER_SEED
    predictors: tuple[str, ...] | None = None  # None: every non-outcome variable
    outcome: str = "Y"
    standardize: bool = True
    methods: tuple[str, ...] = METHODS
    test_size: int = 1000
    background_size: int | None = 100  # None: the whole training split
    fit: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.predictors is not None:
            object.__setattr__(self, "predictors", tuple(self.predictors))
            if not self.predictors:
                raise ConfigError("the predictor subset is empty")
            if self.outcome in self.predictors:
                raise ConfigError(f"outcome {self.outcome!r} is also listed as a predictor")
            if len(set(self.predictors)) != len(self.predictors):
                raise ConfigError("duplicate predictors")
        object.__setattr__(self, "methods", tuple(self.methods))
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise ConfigError(f"methods must be a nonempty subset of {METHODS}, got {unknown}")
        if self.test_size < 1:
            raise ConfigError("test_size must be >= 1")
        if self.background_size is not None and self.background_size < 1:
            raise ConfigError("background_size must be >= 1")

    def seed_for(self, *labels) -> int:
        return _rng.derive_seed(self.seed, *labels)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    predictors: tuple[str, ...]
    reports: dict[str, ImportanceReport]
    test_mse: dict[str, float]
    shapley: dict[str, ShapleyMatrix]
    models: dict
    provenance: dict

    def report_list(self) -> list[ImportanceReport]:
        return [self.reports[m] for m in self.config.methods]


def prepare_data(cfg: ExperimentConfig, data: Dataset | None = None):
    """Sampled (or given), optionally standardized data plus its 60/40 split."""
    if data is None:
        ds = sample(load_scm(cfg.scm), cfg.n, cfg.seed_for("sample"))
    else:
        ds = data
    if cfg.standardize:
        ds, _ = standardize(ds)
    train, test = split(ds, TRAIN_FRACTION, cfg.seed_for("split"))
    return ds, train, test


def _resolve_predictors(cfg, ds):
    if cfg.outcome not in ds.columns:
        raise ConfigError(f"outcome {cfg.outcome!r} is not a variable of the SCM")
    if cfg.predictors is None:
        return tuple(c for c in ds.columns if c != cfg.outcome)
    missing = [p for p in cfg.predictors if p not in ds.columns]
    if missing:
        raise ConfigError(f"predictors {missing} are not variables of the SCM")
    return cfg.predictors


def explainer_rows(cfg: ExperimentConfig, train: Dataset, test: Dataset):
    """Seeded subsets: up to ``test_size`` test rows and the background sample."""
    m = min(cfg.test_size, test.n_rows)
    rows = np.sort(_rng.generator(cfg.seed_for("explain", "test")).permutation(test.n_rows)[:m])
    if cfg.background_size is None or cfg.background_size >= train.n_rows:
        background = train
    else:
        bg = _rng.generator(cfg.seed_for("explain", "background")).permutation(train.n_rows)
        background = train.take(np.sort(bg[:cfg.background_size]))
    return test.take(rows), background


def fit_models(cfg: ExperimentConfig, train: Dataset, predictors, kinds) -> dict:
    models = {}
    if "lr" in kinds:
        models["lr"] = fit_ols(train, cfg.outcome, predictors)
    if "rf" in kinds:
        models["rf"] = fit_forest(train, cfg.outcome, cfg.fit, cfg.seed_for("fit", "rf"), predictors)
    if "mlp" in kinds:
        models["mlp"] = fit_mlp(train, cfg.outcome, cfg.fit, cfg.seed_for("fit", "mlp"), predictors)
    return models


def run_experiment(cfg: ExperimentConfig, data: Dataset | None = None) -> ExperimentResult:
    """Fit the models the requested methods need and compute every report.

    ``data`` replaces sampling from ``cfg.scm`` (the SCM is then unused).
    """
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    ds, train, test = prepare_data(cfg, data)
    predictors = _resolve_predictors(cfg, ds)
    kinds = {_MODEL_OF[m] for m in cfg.methods if m in _MODEL_OF}
    models = fit_models(cfg, train, predictors, kinds)
    y_test = test.column(cfg.outcome)
    test_mse = {k: mse(predict(models[k], test), y_test) for k in ("lr", "rf", "mlp")
                if k in models}
    points, background = explainer_rows(cfg, train, test)

    reports, shapley = {}, {}
    for method in cfg.methods:
        if method == "LR-coefs":
            reports[method] = coef_report(models["lr"], predictors)
        elif method == "RF-imps":
            reports[method] = impurity_importances(models["rf"], predictors)
        elif method == "bi-corrs":
            reports[method] = correlation_report(ds, cfg.outcome, predictors)
        else:
            model = models["rf" if method == "RF-Shap" else "mlp"]
            sm, rep = shapley_report(model, points, background, predictors, method)
            shapley[method], reports[method] = sm, rep

    provenance = {
        "config": asdict(cfg),
        "data": "given" if data is not None else f"sampled from {cfg.scm}",
        "seeds": {"sample": cfg.seed_for("sample"), "split": cfg.seed_for("split"),
                  "rf": cfg.seed_for("fit", "rf"), "mlp": cfg.seed_for("fit", "mlp")},
        "rows": {"train": train.n_rows, "test": test.n_rows,
                 "explained": points.n_rows, "background": background.n_rows},
        "started": started,
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    return ExperimentResult(cfg, predictors, reports, test_mse, shapley, models, provenance)


@dataclass(frozen=True)
class AuditRow:
    a: str
    b: str
    cond: tuple[str, ...]
    implied_independent: bool
    test_independent: bool
    p_value: float

    @property
    def agrees(self) -> bool:
        return self.implied_independent == self.test_independent


@dataclass
class AuditTable:
    rows: list[AuditRow]
    alpha: float
    max_cond: int

    @property
    def agreement(self) -> float:
        return sum(r.agrees for r in self.rows) / len(self.rows) if self.rows else float("nan")

    def counts(self) -> dict:
        out = {}
        for implied in (True, False):
            sub = [r for r in self.rows if r.implied_independent == implied]
            out["independent" if implied else "dependent"] = (sum(r.agrees for r in sub), len(sub))
        return out

    def to_csv(self) -> str:
        lines = ["a,b,cond,implied_independent,test_independent,p_value"]
        for r in self.rows:
            lines.append(f"{r.a},{r.b},{' '.join(r.cond)},{int(r.implied_independent)},"
                         f"{int(r.test_independent)},{r.p_value!r}")
        return "\n".join(lines) + "\n"


def audit_independencies(cfg: ExperimentConfig, alpha: float, max_cond: int,
                         dependent_sample: int | None = None) -> AuditTable:
    """Compare d-separation with Fisher z decisions on sampled data.

    Every implied independence with at most ``max_cond`` conditioning
    variables is tested, together with an equally large seeded sample of
    d-connected triples (``dependent_sample`` overrides the size).
    """
    scm = load_scm(cfg.scm)
    ds = sample(scm, cfg.n, cfg.seed_for("sample"))
    dag = scm.dag
    independent = implied_independencies(dag, max_cond)
    connected = []
    for i, a in enumerate(dag.nodes):
        for b in dag.nodes[i + 1:]:
            rest = [n for n in dag.nodes if n not in (a, b)]
            for size in range(min(max_cond, len(rest)) + 1):
                for cond in itertools.combinations(rest, size):
                    if not d_separated(dag, {a}, {b}, cond):
                        connected.append((a, b, cond))
    want = len(independent) if dependent_sample is None else dependent_sample
    want = min(want, len(connected))
    if want < len(connected):
        pick = _rng.generator(cfg.seed_for("audit", "dependent")).choice(
            len(connected), size=want, replace=False)
        connected = [connected[i] for i in sorted(pick)]
    rows = []
    for triples, implied in ((independent, True), (connected, False)):
        for a, b, cond in triples:
            res = fisher_z_ci(ds, a, b, cond, alpha)
            rows.append(AuditRow(a, b, tuple(cond), implied, res.independent, res.p_value))
    return AuditTable(rows, alpha, max_cond)
