"""Command line interface.

Exit status: 0 on success, 1 for invalid input or arguments, 2 when a
computation or file operation fails.
"""

from __future__ import annotations

import argparse
import json
import sys

from ..data import Dataset
from ..discovery import pc
from ..errors import ComputationError, ValidationError
from ..explain import METHODS
from ..independence import DEFAULT_K, DEFAULT_N_PERM, CmiKnn, FisherZ
from ..models import FitConfig, fit_forest, fit_mlp, fit_ols, mse, predict
from ..scm import load_scm, sample
from .experiment import (MASTER_SEED, ExperimentConfig, audit_independencies, prepare_data,
                         run_experiment)
from .render import _write, emit_svg, reports_csv
from .reproduce import TARGETS, reproduce

METHOD_FLAGS = {m.lower(): m for m in METHODS}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _names(text):
    if text is None:
        return None
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    if not names:
        raise ValidationError("empty predictor list")
    return names


def _background(text):
    if text == "all":
        return None
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a row count or 'all'") from None
    if v < 1:
        raise argparse.ArgumentTypeError("background size must be >= 1")
    return v


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        _write(out, text)


def _load_data(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return Dataset.from_csv(fh.read())


def _data_or_sample(args) -> Dataset:
    if args.data:
        return _load_data(args.data)
    return sample(load_scm(args.scm), args.n, ExperimentConfig(n=args.n, seed=args.seed)
                  .seed_for("sample"))


def cmd_sample(args):
    ds = sample(load_scm(args.scm), args.n, args.seed)
    _emit(ds.to_csv(), args.out)


def cmd_fit(args):
    cfg = ExperimentConfig(scm="complex", seed=args.seed, outcome=args.outcome,
                           predictors=_names(args.predictors), standardize=args.standardize)
    ds, train, test = prepare_data(cfg, _load_data(args.data))
    preds = cfg.predictors or tuple(c for c in ds.columns if c != cfg.outcome)
    fc = FitConfig()
    if args.model == "lr":
        model = fit_ols(train, cfg.outcome, preds)
    elif args.model == "rf":
        model = fit_forest(train, cfg.outcome, fc, cfg.seed_for("fit", "rf"), preds)
    else:
        model = fit_mlp(train, cfg.outcome, fc, cfg.seed_for("fit", "mlp"), preds)
    summary = {"model": args.model, "outcome": cfg.outcome, "predictors": list(preds),
               "train_rows": train.n_rows, "test_rows": test.n_rows,
               "test_mse": mse(predict(model, test), test.column(cfg.outcome))}
    if args.model == "lr":
        summary["intercept"] = model.intercept
        summary["coefficients"] = dict(model.coefficients)
    _emit(json.dumps(summary, indent=2) + "\n", args.out)


def cmd_explain(args):
    methods = tuple(METHOD_FLAGS[m] for m in args.method)
    cfg = ExperimentConfig(scm=args.scm, n=args.n, seed=args.seed, outcome=args.outcome,
                           predictors=_names(args.predictors), standardize=args.standardize,
                           methods=methods, test_size=args.test_size,
                           background_size=args.background_size)
    data = _load_data(args.data) if args.data else None
    res = run_experiment(cfg, data)
    _emit(reports_csv(res.report_list()), args.out)
    if args.svg:
        emit_svg(res.report_list(), args.svg)
    for k, v in res.test_mse.items():
        print(f"test MSE {k}: {v:.6g}", file=sys.stderr)


def cmd_audit(args):
    cfg = ExperimentConfig(scm=args.scm, n=args.n, seed=args.seed)
    table = audit_independencies(cfg, args.alpha, args.max_cond)
    if args.out:
        _write(args.out, table.to_csv())
    c = table.counts()
    print(f"agreement {table.agreement:.4f} over {len(table.rows)} triples "
          f"(independent {c['independent'][0]}/{c['independent'][1]}, "
          f"dependent {c['dependent'][0]}/{c['dependent'][1]})")


def cmd_discover(args):
    ds = _data_or_sample(args)
    test = FisherZ() if args.test == "fisher-z" else CmiKnn(args.k, args.n_perm, args.seed)
    g = pc(ds, test, args.alpha, args.max_cond)
    _emit(g.to_text(), args.out)


def cmd_reproduce(args):
    base = ExperimentConfig(standardize=args.standardize, test_size=args.test_size,
                            background_size=args.background_size)
    for path in reproduce(args.target, args.outdir, args.seed, base):
        print(path)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="causalexplain", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def seeded(sp):
        sp.add_argument("--seed", type=int, default=MASTER_SEED)

    def source(sp):
        sp.add_argument("--scm", default="complex", help="builtin name (simple, complex) or JSON path")
        sp.add_argument("--n", type=int, default=10_000)

    def standardize_flag(sp, default):
        sp.add_argument("--standardize", dest="standardize", action="store_true", default=default)
        sp.add_argument("--no-standardize", dest="standardize", action="store_false")

    sp = sub.add_parser("sample", help="draw a dataset from an SCM")
    source(sp)
    seeded(sp)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("fit", help="fit one model on a CSV and report its test MSE")
    sp.add_argument("--model", choices=("lr", "rf", "mlp"), required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--outcome", default="Y")
    sp.add_argument("--predictors", help="comma separated; default all but the outcome")
    standardize_flag(sp, False)
    seeded(sp)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("explain", help="importance reports as CSV")
    sp.add_argument("--method", choices=sorted(METHOD_FLAGS), action="append", required=True)
    source(sp)
    sp.add_argument("--data", help="CSV to use instead of sampling from --scm")
    sp.add_argument("--outcome", default="Y")
    sp.add_argument("--predictors")
    standardize_flag(sp, True)
    seeded(sp)
    sp.add_argument("--test-size", type=int, default=1000)
    sp.add_argument("--background-size", type=_background, default=100,
                    help="rows drawn from the training split, or 'all'")
    sp.add_argument("--out", default="-")
    sp.add_argument("--svg")
    sp.set_defaults(func=cmd_explain)

    sp = sub.add_parser("audit", help="d-separation vs Fisher z agreement")
    source(sp)
    seeded(sp)
    sp.add_argument("--alpha", type=float, default=0.01)
    sp.add_argument("--max-cond", type=int, default=3)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("discover", help="PC algorithm; prints the CPDAG edge list")
    source(sp)
    sp.add_argument("--data")
    seeded(sp)
    sp.add_argument("--test", choices=("fisher-z", "cmi-knn"), default="fisher-z")
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--max-cond", type=int, default=3)
    sp.add_argument("--k", type=int, default=DEFAULT_K)
    sp.add_argument("--n-perm", type=int, default=DEFAULT_N_PERM)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_discover)

    sp = sub.add_parser("reproduce", help="regenerate a table or figure")
    sp.add_argument("--target", choices=TARGETS, required=True)
    sp.add_argument("--outdir", required=True)
    seeded(sp)
    standardize_flag(sp, True)
    sp.add_argument("--test-size", type=int, default=1000)
    sp.add_argument("--background-size", type=_background, default=100)
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ComputationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
