"""Regenerate the correlation table, importance figures and discovered graphs."""

from __future__ import annotations

import os
from dataclasses import replace

from ..data import format_rp, pearson
from ..discovery import pc, skeleton_shd, true_cpdag
from ..errors import ValidationError
from ..graph import shd
from ..independence import FisherZ
from ..scm import PREDICTOR_NAMES, builtin, sample
from .experiment import MASTER_SEED, ExperimentConfig, run_experiment
from .render import _write, emit_csv, emit_graph_svg, emit_svg

TARGETS = ("table1", "fig3", "fig4", "fig5")
FIG4_SCENARIOS = {
    "i": (),
    "ii": ("H",),
    "iii": ("H", "D"),
    "iv": ("H", "D", "G"),
}
ALPHA_SWEEP = (0.001, 0.01, 0.05)


def _mse_csv(result) -> str:
    lines = ["model,test_mse"]
    for k, v in result.test_mse.items():
        lines.append(f"{k},{v!r}")
    return "\n".join(lines) + "\n"


def table1(outdir, seed=MASTER_SEED, n=10_000) -> list[str]:
    cfg = ExperimentConfig(scm="complex", n=n, seed=seed)
    ds = sample(builtin("complex"), n, cfg.seed_for("sample"))
    lines = ["predictor,r,p,formatted"]
    for p in PREDICTOR_NAMES:
        r, pv = pearson(ds, p, "Y")
        lines.append(f"{p},{r!r},{pv!r},{format_rp(r, pv)}")
    return [_write(os.path.join(outdir, "table1.csv"), "\n".join(lines) + "\n")]


def fig3(outdir, seed=MASTER_SEED, base: ExperimentConfig | None = None) -> list[str]:
    cfg = replace(base or ExperimentConfig(), scm="simple", seed=seed, predictors=None)
    res = run_experiment(cfg)
    reps = res.report_list()
    return [emit_csv(reps, os.path.join(outdir, "fig3.csv")),
            emit_svg(reps, os.path.join(outdir, "fig3.svg"), "simple graph, all predictors"),
            _write(os.path.join(outdir, "fig3_mse.csv"), _mse_csv(res))]


def fig4_config(scenario: str, seed=MASTER_SEED, base: ExperimentConfig | None = None
                ) -> ExperimentConfig:
    drop = FIG4_SCENARIOS[scenario]
    preds = tuple(p for p in PREDICTOR_NAMES if p not in drop)
    return replace(base or ExperimentConfig(), scm="complex", seed=seed, predictors=preds)


def fig4(outdir, seed=MASTER_SEED, base: ExperimentConfig | None = None,
         scenarios=tuple(FIG4_SCENARIOS)) -> list[str]:
    files = []
    for sc in scenarios:
        cfg = fig4_config(sc, seed, base)
        res = run_experiment(cfg)
        reps = res.report_list()
        dropped = ", ".join(f"-{p}" for p in FIG4_SCENARIOS[sc]) or "all predictors"
        files.append(emit_csv(reps, os.path.join(outdir, f"fig4_{sc}.csv")))
        files.append(emit_svg(reps, os.path.join(outdir, f"fig4_{sc}.svg"),
                              f"complex graph ({sc}): {dropped}"))
        files.append(_write(os.path.join(outdir, f"fig4_{sc}_mse.csv"), _mse_csv(res)))
    return files


def fig5(outdir, seed=MASTER_SEED, n=10_000, alphas=ALPHA_SWEEP, max_cond=3) -> list[str]:
    cfg = ExperimentConfig(scm="complex", n=n, seed=seed)
    scm = builtin("complex")
    ds = sample(scm, n, cfg.seed_for("sample"))
    truth = true_cpdag(scm.dag)
    files = [_write(os.path.join(outdir, "fig5_true.txt"), truth.to_text()),
             emit_graph_svg(truth, os.path.join(outdir, "fig5_true.svg"), "true CPDAG")]
    summary = ["alpha,skeleton_shd,shd,n_edges"]
    for a in alphas:
        g = pc(ds, FisherZ(), a, max_cond)
        tag = f"{a:g}"
        files.append(_write(os.path.join(outdir, f"fig5_alpha{tag}.txt"), g.to_text()))
        files.append(emit_graph_svg(g, os.path.join(outdir, f"fig5_alpha{tag}.svg"),
                                    f"PC, Fisher z, alpha={tag}"))
        summary.append(f"{tag},{skeleton_shd(g, truth)},{shd(g, truth)},{len(g.lines())}")
    files.append(_write(os.path.join(outdir, "fig5_summary.csv"), "\n".join(summary) + "\n"))
    return files


def reproduce(target: str, outdir, seed=MASTER_SEED, base: ExperimentConfig | None = None
              ) -> list[str]:
    """Write the files of one target under ``outdir`` and return their paths."""
    if target == "table1":
        return table1(outdir, seed)
    if target == "fig3":
        return fig3(outdir, seed, base)
    if target == "fig4":
        return fig4(outdir, seed, base)
    if target == "fig5":
        return fig5(outdir, seed)
    raise ValidationError(f"unknown target {target!r}; choose from {TARGETS}")
