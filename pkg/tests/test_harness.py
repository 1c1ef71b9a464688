import csv
import io
import json
import re

import numpy as np
import pytest

from causalexplain.data import Dataset
from causalexplain.errors import ConfigError
from causalexplain.explain import make_report
from causalexplain.graph import parse_cpdag
from causalexplain.harness import (ExperimentConfig, audit_independencies, bar_chart_svg,
                                   emit_csv, emit_svg, reproduce, run_experiment)
from causalexplain.harness.cli import main
from causalexplain.harness.render import graph_svg, reports_csv
from causalexplain.harness.reproduce import FIG4_SCENARIOS, fig4_config

FAST = dict(n=2000, methods=("LR-coefs", "bi-corrs"))


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(predictors=("Y",))
    with pytest.raises(ConfigError):
        ExperimentConfig(predictors=())
    with pytest.raises(ConfigError):
        ExperimentConfig(methods=("SHAP",))
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig(predictors=("Q",), **FAST))


def test_seed_derivation_is_labelled():
    cfg = ExperimentConfig()
    assert cfg.seed_for("sample") != cfg.seed_for("split")
    assert cfg.seed_for("fit", "rf") == ExperimentConfig().seed_for("fit", "rf")
    assert cfg.seed_for("sample") != ExperimentConfig(seed=1).seed_for("sample")


def test_run_experiment_reports_and_provenance():
    res = run_experiment(ExperimentConfig(**FAST))
    assert [r.method for r in res.report_list()] == ["LR-coefs", "bi-corrs"]
    assert set(res.test_mse) == {"lr"} and np.isfinite(res.test_mse["lr"])
    for rep in res.report_list():
        assert rep.predictors == res.predictors
    prov = res.provenance
    assert prov["rows"]["train"] == 1200 and prov["rows"]["test"] == 800
    assert prov["started"] <= prov["finished"]
    again = run_experiment(ExperimentConfig(**FAST))
    assert reports_csv(again.report_list()) == reports_csv(res.report_list())


def test_drop_h_d_g_marks_x_and_k():
    cfg = fig4_config("iv", base=ExperimentConfig(standardize=False, methods=("LR-coefs",)))
    rep = run_experiment(cfg).reports["LR-coefs"]
    assert set(rep.ranking()[:2]) == {"X", "K"}


def test_given_data_replaces_sampling():
    gen = np.random.default_rng(0)
    x = gen.standard_normal((300, 2))
    ds = Dataset(["a", "b", "Y"], np.c_[x, 3 * x[:, 0] + 0.1 * gen.standard_normal(300)])
    res = run_experiment(ExperimentConfig(methods=("LR-coefs",)), data=ds)
    assert res.reports["LR-coefs"].ranking()[0] == "a"
    assert res.provenance["data"] == "given"


# -- audit ------------------------------------------------------------------

def test_audit_simple_graph_marginal_pairs():
    table = audit_independencies(ExperimentConfig(scm="simple"), 0.01, 0)
    independent = [r for r in table.rows if r.implied_independent]
    assert len(independent) == 28
    assert sum(r.test_independent for r in independent) >= 27


def test_audit_large_alpha_lowers_agreement_on_independent_pairs():
    cfg = ExperimentConfig(n=2000)
    low = audit_independencies(cfg, 0.01, 2).counts()["independent"]
    high = audit_independencies(cfg, 0.5, 2).counts()["independent"]
    assert high[0] / high[1] < low[0] / low[1]


def test_audit_csv():
    table = audit_independencies(ExperimentConfig(scm="simple", n=500), 0.01, 0)
    rows = list(csv.DictReader(io.StringIO(table.to_csv())))
    assert len(rows) == len(table.rows)
    assert set(rows[0]) == {"a", "b", "cond", "implied_independent", "test_independent", "p_value"}


# -- rendering ----------------------------------------------------------------

def five_reports(n_pred=8):
    gen = np.random.default_rng(1)
    names = [f"P{i}" for i in range(n_pred)]
    return [make_report(m, dict(zip(names, gen.random(n_pred))))
            for m in ("LR-coefs", "RF-imps", "RF-Shap", "NN-Shap", "bi-corrs")]


def test_single_full_height_bar():
    svg = bar_chart_svg([make_report("LR-coefs", {"a": 1.0})])
    bars = re.findall(r'<rect class="bar"[^>]*height="([\d.]+)"', svg)
    assert bars == ["0.00"]  # a lone value normalizes to 0 under range normalization
    from causalexplain.explain import ImportanceReport
    full = bar_chart_svg([ImportanceReport("LR-coefs", {"a": 1.0}, {"a": 1.0})])
    heights = re.findall(r'<rect class="bar"[^>]*height="([\d.]+)"', full)
    assert heights == ["220.00"]


def test_svg_counts_and_determinism(tmp_path):
    reps = five_reports()
    svg = bar_chart_svg(reps, "t")
    assert svg.count('class="bar"') == 40
    assert svg.count('class="legend"') == 5
    a = emit_svg(reps, tmp_path / "a.svg")
    b = emit_svg(five_reports(), tmp_path / "b.svg")
    assert open(a, "rb").read() == open(b, "rb").read()


def test_svg_rejects_mismatched_predictors():
    with pytest.raises(Exception):
        bar_chart_svg([make_report("a", {"x": 1.0}), make_report("b", {"y": 1.0})])
    with pytest.raises(Exception):
        bar_chart_svg([])


def test_csv_schema(tmp_path):
    path = emit_csv(five_reports(), tmp_path / "r.csv")
    rows = list(csv.DictReader(open(path)))
    assert list(rows[0]) == ["method", "predictor", "raw", "normalized"]
    assert len(rows) == 40
    assert {r["method"] for r in rows} == {"LR-coefs", "RF-imps", "RF-Shap", "NN-Shap", "bi-corrs"}


def test_graph_svg_draws_every_edge():
    g = parse_cpdag("A -> B\nB -- C\n")
    svg = graph_svg(g)
    assert svg.count('class="edge"') == 2 and svg.count("marker-end") == 1


# -- reproduce and CLI --------------------------------------------------------------

def test_reproduce_table1(tmp_path):
    (path,) = reproduce("table1", tmp_path)
    rows = {r["predictor"]: r for r in csv.DictReader(open(path))}
    assert rows["H"]["formatted"] == "1.00(.00)"
    assert len(rows) == 8


def test_fig4_scenarios():
    assert FIG4_SCENARIOS["iv"] == ("H", "D", "G")
    cfg = fig4_config("iii")
    assert "H" not in cfg.predictors and "D" not in cfg.predictors and len(cfg.predictors) == 6


def test_reproduce_fig5(tmp_path):
    files = reproduce("fig5", tmp_path)
    truth = parse_cpdag(open(tmp_path / "fig5_true.txt").read())
    assert ("C", "X") in truth.directed and ("A", "X") in truth.directed
    assert len(files) == 2 + 2 * 3 + 1


def test_cli_sample_is_deterministic(tmp_path, capsys):
    assert main(["sample", "--scm", "complex", "--n", "50", "--seed", "3",
                 "--out", str(tmp_path / "a.csv")]) == 0
    assert main(["sample", "--scm", "complex", "--n", "50", "--seed", "3",
                 "--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert main(["sample", "--n", "5"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "X,D,A,K,C,F,G,H,Y"


def test_cli_fit_explain_discover(tmp_path, capsys):
    data = tmp_path / "d.csv"
    main(["sample", "--n", "1500", "--out", str(data)])
    assert main(["fit", "--model", "lr", "--data", str(data)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["train_rows"] == 900 and "coefficients" in summary
    assert main(["explain", "--method", "lr-coefs", "--method", "bi-corrs", "--data", str(data),
                 "--out", str(tmp_path / "e.csv"), "--svg", str(tmp_path / "e.svg")]) == 0
    assert (tmp_path / "e.svg").exists()
    assert main(["discover", "--data", str(data), "--alpha", "0.01"]) == 0
    assert " -> " in capsys.readouterr().out


def test_cli_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["explain", "--method", "shap"])
    assert exc.value.code == 1
    assert main(["explain", "--method", "lr-coefs", "--n", "200", "--predictors", "X,Y"]) == 1
    assert main(["sample", "--scm", "nonexistent-graph"]) == 1
    x = np.arange(20.0)
    bad = tmp_path / "bad.csv"
    bad.write_text(Dataset(["a", "b", "Y"], np.c_[x, 2 * x, x ** 2]).to_csv())
    assert main(["fit", "--model", "lr", "--data", str(bad)]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["sample", "--n", "5", "--out", str(blocker / "x.csv")]) == 2
    capsys.readouterr()


def test_cli_audit(capsys):
    assert main(["audit", "--scm", "simple", "--n", "1000", "--max-cond", "0"]) == 0
    assert capsys.readouterr().out.startswith("agreement ")
