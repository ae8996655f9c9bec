"""Command-line pipeline: validate | fit | score | evaluate | cv | enrich | simulate.

Every run writes a manifest (run_manifest.json) listing the command, a hash
of the effective configuration, seeds, an input-file fingerprint, and every
emitted file. Exit codes: 0 success, 2 configuration error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time

from . import __version__, reports
from .cohort import cohort_csv_text, filter_analytic, ingest_csv, summarize
from .config import config_to_dict, load_config
from .crossval import run_cv
from .enrichment import build_plan
from .errors import ConfigError, DataError, HdRiskcastError, NumericalError
from .metrics import global_uno_c, km_roc, uno_c_profile
from .models import models_from_config
from .simulate import calibrate_censoring

OUTPUT_ENV_VAR = "HD_RISKCAST_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _sha256_file(path) -> str | None:
    if not os.path.exists(path):
        return None
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class _Run:
    """Collects emitted files and writes the manifest at the end."""

    def __init__(self, command, cfg, out_dir, seed_override):
        self.command = command
        self.cfg = cfg
        self.out_dir = out_dir
        self.seed_override = seed_override
        self.emitted = []
        self.started = time.time()

    def path(self, name) -> str:
        return os.path.join(self.out_dir, name)

    def emit_csv(self, name, header, rows) -> str:
        path = self.path(name)
        reports.write_csv(path, header, rows)
        self.emitted.append(name)
        return path

    def emit_json(self, name, obj) -> str:
        path = self.path(name)
        reports.write_json(path, obj)
        self.emitted.append(name)
        return path

    def emit_text(self, name, text) -> str:
        path = self.path(name)
        reports.write_text(path, text)
        self.emitted.append(name)
        return path

    def finish(self) -> None:
        config_dict = config_to_dict(self.cfg)
        config_hash = hashlib.sha256(
            json.dumps(config_dict, sort_keys=True).encode()
        ).hexdigest()
        manifest = {
            "command": self.command,
            "tool_version": __version__,
            "config_hash": config_hash,
            "seed_override": self.seed_override,
            "cv_seed": self.cfg.cv_seed,
            "simulate_seed": self.cfg.simulate.seed if self.cfg.simulate else None,
            "input_path": self.cfg.input_path,
            "input_sha256": _sha256_file(self.cfg.input_path),
            "started_unix": self.started,
            "finished_unix": time.time(),
            "emitted": sorted(self.emitted),
        }
        reports.write_json(self.path("run_manifest.json"), manifest)


def _load_cohort(cfg):
    cohort, report = ingest_csv(cfg.input_path, cfg.columns_dict() or None)
    for rejection in report.rejections:
        print(f"warning: row {rejection.row} rejected: {rejection.reason}", file=sys.stderr)
    analytic = filter_analytic(cohort, cfg.cag_min, cfg.cag_max, cfg.require_undiagnosed)
    if not len(analytic):
        raise DataError("analytic filter removed every subject")
    return analytic, report


def _fit_all(cfg, cohort):
    fitted = {}
    for model in models_from_config(cfg):
        fitted[model.name] = (model, model.fit(cohort))
    return fitted


def _scores_for(model, fitted, cohort, horizon=None):
    if model.horizon_dependent:
        return model.score_values(fitted, cohort, horizon)
    return model.score_values(fitted, cohort)


def cmd_validate(cfg, run) -> int:
    cohort, report = _load_cohort(cfg)
    summary = summarize(cohort)
    text = summary.to_text()
    text += f"censoring_rate = {reports.fmt(cohort.censoring_rate)}\n"
    text += f"rows_read = {report.n_rows}\nrows_rejected = {len(report.rejections)}\n"
    print(text, end="")
    run.emit_text("cohort_summary.txt", text)
    run.emit_json("cohort_summary.json", summary.to_json_dict())
    return EXIT_OK


def _fit_params_block(model_name, fitted):
    if model_name == "langbehn":
        return {
            k: getattr(fitted, k) for k in ("b0", "b1", "b2", "g0", "g1", "g2")
        }
    if model_name == "cap":
        return {k: getattr(fitted, k) for k in ("b0", "b1", "b2", "sigma")}
    return dict(zip(fitted.term_labels, fitted.beta.tolist()))


def cmd_fit(cfg, run) -> int:
    cohort, _ = _load_cohort(cfg)
    blocks = {}
    for name, (model, fitted) in _fit_all(cfg, cohort).items():
        blocks[name] = {"mode": "published", "params": _fit_params_block(name, fitted)}
        if name == "mrs" or name == "pin":
            blocks[name]["loglik"] = fitted.loglik
    run.emit_json("fitted_params.json", blocks)
    print(f"fitted {len(blocks)} model(s) on {len(cohort)} subjects")
    return EXIT_OK


def cmd_score(cfg, run) -> int:
    cohort, _ = _load_cohort(cfg)
    fitted = _fit_all(cfg, cohort)
    header = ["id"] + list(fitted)
    columns = {}
    for name, (model, fit_obj) in fitted.items():
        horizon = getattr(model, "score_horizon", None)
        columns[name] = _scores_for(model, fit_obj, cohort, horizon)
    rows = []
    for i, subject in enumerate(cohort):
        rows.append(tuple([subject.id] + [float(columns[name][i]) for name in fitted]))
    run.emit_csv("scores.csv", header, rows)
    print(f"scored {len(cohort)} subjects with {len(fitted)} model(s)")
    return EXIT_OK


def cmd_evaluate(cfg, run) -> int:
    cohort, _ = _load_cohort(cfg)
    fitted = _fit_all(cfg, cohort)
    tau_grid = cfg.tau_grid
    if tau_grid is None:
        from .crossval import default_tau_grid

        tau_grid = default_tau_grid(cohort)
    summary = {"n": len(cohort), "censoring_rate": cohort.censoring_rate, "models": {}}
    for name, (model, fit_obj) in fitted.items():
        if model.horizon_dependent:
            scores = lambda tau, m=model, f=fit_obj: m.score_values(f, cohort, tau)  # noqa: E731
        else:
            scores = _scores_for(model, fit_obj, cohort)
        profile = uno_c_profile(scores, cohort, tau_grid)
        glob = global_uno_c(profile)
        run.emit_csv(
            f"uno_profile_{name}.csv",
            ("tau", "uno_c", "n_comparable_pairs", "weight_mass"),
            reports.uno_profile_rows(profile),
        )
        aucs = {}
        for t in cfg.roc_times:
            t_scores = scores(t) if callable(scores) else scores
            curve = km_roc(t_scores, cohort, t)
            run.emit_csv(
                f"roc_{name}_t{reports.fmt(float(t))}.csv",
                ("threshold", "fpr", "tpr"),
                reports.roc_curve_rows(curve),
            )
            aucs[reports.fmt(float(t))] = curve.auc
        summary["models"][name] = {
            "global_uno_c": glob,
            "uno_by_tau": {reports.fmt(r.tau): r.value for r in profile},
            "auc_by_time": aucs,
        }
        print(f"{name}: global Uno C = {glob:.4f}")
    run.emit_json("evaluate_report.json", summary)
    return EXIT_OK


def cmd_cv(cfg, run, threads) -> int:
    cohort, _ = _load_cohort(cfg)
    report = run_cv(
        cohort,
        models_from_config(cfg),
        k=cfg.cv_k,
        seed=cfg.cv_seed,
        tau_grid=cfg.tau_grid,
        roc_times=cfg.roc_times,
        n_jobs=threads,
    )
    run.emit_json("cv_report.json", report.to_json_dict())
    uno_rows = []
    auc_rows = []
    for name, res in report.models.items():
        for tau, value in sorted(res.mean_uno_by_tau.items()):
            uno_rows.append((name, tau, value))
        for t, value in sorted(res.mean_auc_by_time.items()):
            auc_rows.append((name, t, value))
        print(f"{name}: CV global Uno C = {res.mean_global_uno:.4f}")
    run.emit_csv("cv_uno_by_tau.csv", ("model", "tau", "mean_uno_c"), uno_rows)
    run.emit_csv("cv_auc_by_time.csv", ("model", "t", "mean_auc"), auc_rows)
    return EXIT_OK


def cmd_enrich(cfg, run) -> int:
    cohort, _ = _load_cohort(cfg)
    fitted = _fit_all(cfg, cohort)
    all_plans = []
    for name, (model, fit_obj) in fitted.items():
        if model.horizon_dependent:
            scores = lambda t, m=model, f=fit_obj: m.score_values(f, cohort, t)  # noqa: E731
        else:
            scores = _scores_for(model, fit_obj, cohort)
        plans = build_plan(
            name, scores, cohort, cfg.durations, cfg.effects, power=cfg.power, alpha=cfg.alpha
        )
        all_plans.extend(plans)
    run.emit_csv(
        "enrichment_plan.csv",
        reports.enrichment_header(cfg.effects),
        reports.enrichment_rows(all_plans),
    )
    run.emit_json(
        "enrichment_plan.json",
        [
            {
                "model": p.model,
                "t": p.t,
                "q_star": p.q_star,
                "youden": p.youden,
                "diagnosis_rate": p.diagnosis_rate,
                "power": p.power,
                "alpha": p.alpha,
                "arms": [dataclasses.asdict(a) for a in p.arms],
            }
            for p in all_plans
        ],
    )
    print(f"planned {len(all_plans)} (model, duration) combinations")
    return EXIT_OK


def cmd_simulate(cfg, run, seed_override) -> int:
    if cfg.simulate is None:
        raise ConfigError("config has no 'simulate' block")
    spec = cfg.simulate
    if seed_override is not None:
        spec = dataclasses.replace(spec, seed=seed_override)
    if spec.target_censoring_rate is not None:
        hazard = calibrate_censoring(spec, spec.target_censoring_rate)
        spec = dataclasses.replace(spec, dropout_hazard=hazard)
    cohort = simulate_to_file(spec, run)
    print(
        f"simulated {len(cohort)} subjects "
        f"(censoring rate {cohort.censoring_rate:.3f}) -> cohort.csv"
    )
    return EXIT_OK


def simulate_to_file(spec, run):
    from .simulate import simulate

    cohort = simulate(spec)
    run.emit_text("cohort.csv", cohort_csv_text(cohort))
    return cohort


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdriskcast",
        description="Censoring-aware risk model evaluation and trial enrichment planning",
    )
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory (overrides config/env)")
    parser.add_argument("--seed", type=int, default=None, help="override the configured seed")
    parser.add_argument("--threads", type=int, default=1, help="max parallel fold workers")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("validate", "ingest, filter, and print the baseline summary"),
        ("fit", "fit configured models and write their parameter blocks"),
        ("score", "write per-subject risk scores for every configured model"),
        ("evaluate", "concordance profiles, ROC curves, and AUCs on the full sample"),
        ("cv", "stratified k-fold cross-validated metrics"),
        ("enrich", "Youden thresholds, diagnosis rates, and per-arm sample sizes"),
        ("simulate", "draw a synthetic cohort CSV from the configured generator"),
    ):
        sub.add_parser(name, help=doc)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = args.out or os.environ.get(OUTPUT_ENV_VAR) or cfg.output_dir
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, cv_seed=args.seed)
    run = _Run(args.command, cfg, out_dir, args.seed)
    try:
        if args.command == "validate":
            code = cmd_validate(cfg, run)
        elif args.command == "fit":
            code = cmd_fit(cfg, run)
        elif args.command == "score":
            code = cmd_score(cfg, run)
        elif args.command == "evaluate":
            code = cmd_evaluate(cfg, run)
        elif args.command == "cv":
            code = cmd_cv(cfg, run, args.threads)
        elif args.command == "enrich":
            code = cmd_enrich(cfg, run)
        elif args.command == "simulate":
            code = cmd_simulate(cfg, run, args.seed)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except HdRiskcastError as exc:  # pragma: no cover - defensive catch-all
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    run.finish()
    return code


if __name__ == "__main__":
    raise SystemExit(main())
