"""Batch command-line front end: cross-validated selection runs, synthetic
dataset generation, and the exhaustive-search comparison report."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources

import jsonschema
import numpy as np

from . import search, synth
from .dataio import load_csv, make_split_plan, parse_schema_file, write_dataset_csv
from .dendrogram import LINKAGES, cluster
from .dependence import build_dependence_matrix, dissimilarity
from .discretize import fit_mdlp, transform
from .errors import SparseNBError, ValidationError
from .metrics import parse_constraints, parse_objective
from .search import SearchConfig, brute_force, choose_q, cross_validated_run, run_selection

SCHEMA_VERSION = 1


class UsageError(SparseNBError):
    pass


def load_report_schema() -> dict:
    text = resources.files("sparsenb").joinpath("schemas/run_report.schema.json").read_text()
    return json.loads(text)


def validate_report(report: dict):
    jsonschema.validate(report, load_report_schema())


def _write_report(report: dict, path):
    validate_report(report)
    text = json.dumps(report, indent=2, sort_keys=True)
    if path is None or path == "-":
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _q_flag(value: str):
    if value == search.Q_AUTO:
        return value
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"q must be a float or 'auto', got {value!r}")


def _add_data_flags(sub):
    sub.add_argument("--data", required=True, help="input CSV (header row required)")
    sub.add_argument("--schema", help="column-kind declarations, one `name,kind` per line")
    sub.add_argument("--label", required=True, help="name of the class-label column")
    sub.add_argument("--missing-marker", default="?", help="missing-value marker (default '?')")


def _add_search_flags(sub):
    sub.add_argument("--measure", default="acc",
                     help="objective: acc | auc | recall:CLASS | precision:CLASS")
    sub.add_argument("--constraint", default="",
                     help="comma-separated `measure[:class](>|>=)threshold` terms")
    sub.add_argument("--cuts", type=int, default=100,
                     help="cap on dendrogram cuts (effective count is min(p-1, cuts))")
    sub.add_argument("--max-combos", type=int, default=25,
                     help="max combinations sampled per cut")
    sub.add_argument("--q", type=_q_flag, default="auto",
                     help="cluster inclusion probability, or 'auto'")
    sub.add_argument("--alpha", type=float, default=1.0, help="Laplace smoothing constant")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--linkage", choices=LINKAGES, default="complete")
    sub.add_argument("--stratify", choices=["on", "off"], default="on")


def _load_dataset(args):
    schema = parse_schema_file(args.schema) if args.schema else None
    return load_csv(args.data, schema=schema, label_column=args.label,
                    missing=args.missing_marker)


def _search_config(args, ds) -> SearchConfig:
    try:
        objective = parse_objective(args.measure, ds.class_names)
        constraints = parse_constraints(args.constraint, ds.class_names)
        return SearchConfig(
            objective=objective,
            constraints=constraints,
            max_combinations=args.max_combos,
            max_cuts=args.cuts,
            q=args.q,
            alpha=args.alpha,
            seed=args.seed,
            linkage=args.linkage,
        )
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc


def _config_echo(args, extra=None) -> dict:
    echo = {
        "data": args.data,
        "schema": args.schema,
        "label": args.label,
        "missing_marker": args.missing_marker,
        "measure": args.measure,
        "constraint": args.constraint,
        "max_cuts": args.cuts,
        "max_combinations": args.max_combos,
        "q": args.q,
        "alpha": args.alpha,
        "seed": args.seed,
        "linkage": args.linkage,
        "stratify": args.stratify == "on",
    }
    echo.update(extra or {})
    return echo


def cmd_select(args) -> int:
    ds = _load_dataset(args)
    config = _search_config(args, ds)
    plan_warnings: list[str] = []
    plan = make_split_plan(ds, args.runs, args.folds, args.seed,
                           stratify=args.stratify == "on", warnings=plan_warnings)
    report_body = cross_validated_run(
        ds, plan, config,
        threads=args.threads,
        classic=args.classic,
        discretize_globally=args.discretize == "global",
        keep_audit=args.audit is not None,
    )
    if args.audit is not None:
        _write_audit_csv(report_body, args.audit)
        for rec in report_body["folds"]:
            rec.pop("audit", None)
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "select",
        "config": _config_echo(args, {
            "runs": args.runs,
            "folds": args.folds,
            "threads": args.threads,
            "classic": args.classic,
            "discretize": args.discretize,
        }),
        "plan_warnings": plan_warnings,
        **report_body,
    }
    _write_report(report, args.out)
    if args.summary is not None:
        _write_summary_csv(report, args.summary)
    return 0


def _write_audit_csv(report_body, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "fold", "cut_index", "cut", "draw", "features",
                         "objective_value", "feasible"])
        for rec in report_body["folds"]:
            for row in rec.get("audit", ()):
                writer.writerow([
                    rec["run"], rec["fold"], row["cut_index"], repr(row["cut"]),
                    row["draw"], " ".join(str(i) for i in row["features"]),
                    "" if row["objective_value"] is None else repr(row["objective_value"]),
                    int(row["feasible"]),
                ])


def _write_summary_csv(report, path):
    aggregate = report["aggregate"]
    sparsity = aggregate["sparsity"]["mean"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["measure", "mean", "sd", "sparsity"])
        for name, stats in aggregate["test_measures"].items():
            writer.writerow([name, repr(stats["mean"]), repr(stats["sd"]),
                             "" if sparsity is None else repr(sparsity)])


def cmd_synth(args) -> int:
    try:
        if args.generator == "blocks":
            ds = synth.generate_blocks(synth.SynthConfig(
                p=args.p, rho=args.rho, n=args.n, noise_sd=args.noise_sd, seed=args.seed,
            ))
        else:
            ds = synth.generate_gaussian_pair(args.seed, n=args.n, sigma=args.sigma)
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc
    write_dataset_csv(ds, args.out)
    return 0


def cmd_oracle(args) -> int:
    ds = _load_dataset(args)
    if ds.p > args.max_p:
        raise ValidationError(
            f"oracle refuses p = {ds.p} > {args.max_p}: 2^p - 1 subsets is too many"
        )
    config = _search_config(args, ds)
    plan = make_split_plan(ds, 1, args.folds, args.seed, stratify=args.stratify == "on")
    train_idx, val_idx, _ = plan.indices[0][0]
    bins = fit_mdlp(ds.subset(train_idx))
    dtrain = transform(ds.subset(train_idx), bins)
    dval = transform(ds.subset(val_idx), bins)

    result = brute_force(dtrain, dval, config.objective, config.constraints,
                         max_p=args.max_p, alpha=config.alpha)

    m = build_dependence_matrix(dtrain)
    q = float(config.q) if not isinstance(config.q, str) else choose_q(m)
    dend = cluster(dissimilarity(m), config.linkage)
    from dataclasses import replace
    selection = run_selection(dtrain, dval, dend,
                              replace(config, q=q, seed=config.seed))

    def combo_entry(combo, value, feasible):
        return {
            "features": list(combo.indices),
            "feature_names": [ds.feature_names[i] for i in combo.indices],
            "objective_value": value,
            "feasible": feasible,
        }

    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "oracle",
        "config": _config_echo(args, {"folds": args.folds, "max_p": args.max_p}),
        "class_names": list(ds.class_names),
        "feature_names": list(ds.feature_names),
        "n_rows": ds.n,
        "n_features": ds.p,
        "rows": [combo_entry(r.combo, r.objective_value, r.feasible) for r in result.rows],
        "oracle_winner": combo_entry(result.winner, result.objective_value, result.feasible),
        "selection_winner": combo_entry(
            selection.winner, selection.objective_value,
            selection.constraint_result.feasible,
        ),
    }
    _write_report(report, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsenb",
        description="Sparse Naive Bayes: dependence-clustered feature-subset selection",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    select = subs.add_parser("select", help="cross-validated feature selection run")
    _add_data_flags(select)
    _add_search_flags(select)
    select.add_argument("--runs", type=int, default=10)
    select.add_argument("--folds", type=int, default=10)
    select.add_argument("--threads", type=int, default=1)
    select.add_argument("--classic", action="store_true",
                        help="baseline: skip the search and use all features")
    select.add_argument("--discretize", choices=["fold", "global"], default="fold",
                        help="refit bins per training fold (default) or once globally")
    select.add_argument("--out", help="JSON report path (default: stdout)")
    select.add_argument("--audit", help="write the per-candidate audit trail CSV here")
    select.add_argument("--summary", help="write a measure,mean,sd,sparsity CSV here")
    select.set_defaults(func=cmd_select)

    sy = subs.add_parser("synth", help="write a synthetic dataset CSV")
    sygen = sy.add_subparsers(dest="generator", required=True)
    blocks = sygen.add_parser("blocks", help="block-correlated sign-of-response classes")
    blocks.add_argument("--p", type=int, required=True)
    blocks.add_argument("--rho", type=float, required=True)
    blocks.add_argument("--n", type=int, default=2000)
    blocks.add_argument("--noise-sd", type=float, default=2.5)
    blocks.add_argument("--seed", type=int, default=0)
    blocks.add_argument("--out", required=True)
    blocks.set_defaults(func=cmd_synth)
    pair = sygen.add_parser("pair", help="four Gaussian features with one correlated pair")
    pair.add_argument("--seed", type=int, default=0)
    pair.add_argument("--n", type=int, default=2000)
    pair.add_argument("--sigma", type=float, default=1.0)
    pair.add_argument("--out", required=True)
    pair.set_defaults(func=cmd_synth)

    oracle = subs.add_parser("oracle", help="exhaustive subset table vs. the sampler")
    _add_data_flags(oracle)
    _add_search_flags(oracle)
    oracle.add_argument("--folds", type=int, default=10)
    oracle.add_argument("--max-p", type=int, default=15)
    oracle.add_argument("--out", help="JSON report path (default: stdout)")
    oracle.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SparseNBError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
