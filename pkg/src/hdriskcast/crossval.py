"""Event-stratified k-fold cross-validation of risk models.

Folds are stratified on the event indicator: diagnosed and censored
subjects are shuffled separately with a seeded PCG64 generator
(numpy.random.default_rng) and dealt round-robin, so per-fold event counts
differ by at most one. Each fold is scored by a model trained on its
complement; all evaluation quantities, including the censoring curve inside
the concordance weights, are computed on the held-out fold only.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cohort import Cohort
from .errors import DataError, HdRiskcastError, NumericalError
from .metrics import global_uno_c, km_roc, uno_c_profile

DEFAULT_ROC_TIMES = (3.0, 5.0)


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    seed: int
    fold_of: dict  # subject id -> fold index

    def ids_in_fold(self, fold: int) -> tuple:
        return tuple(sid for sid, f in self.fold_of.items() if f == fold)


@dataclass
class FoldResult:
    fold: int
    n_test: int
    n_test_events: int
    uno_by_tau: dict = field(default_factory=dict)  # tau -> value
    global_uno: float | None = None
    auc_by_time: dict = field(default_factory=dict)  # t -> auc
    error: str | None = None


@dataclass
class ModelCvResult:
    model: str
    folds: list
    mean_uno_by_tau: dict = field(default_factory=dict)
    mean_global_uno: float | None = None
    mean_auc_by_time: dict = field(default_factory=dict)


@dataclass
class CvReport:
    k: int
    seed: int
    tau_grid: tuple
    roc_times: tuple
    models: dict  # name -> ModelCvResult

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "tau_grid": list(self.tau_grid),
            "roc_times": list(self.roc_times),
            "models": {
                name: {
                    "mean_uno_by_tau": {repr(t): v for t, v in res.mean_uno_by_tau.items()},
                    "mean_global_uno": res.mean_global_uno,
                    "mean_auc_by_time": {repr(t): v for t, v in res.mean_auc_by_time.items()},
                    "folds": [
                        {
                            "fold": f.fold,
                            "n_test": f.n_test,
                            "n_test_events": f.n_test_events,
                            "uno_by_tau": {repr(t): v for t, v in f.uno_by_tau.items()},
                            "global_uno": f.global_uno,
                            "auc_by_time": {repr(t): v for t, v in f.auc_by_time.items()},
                            "error": f.error,
                        }
                        for f in res.folds
                    ],
                }
                for name, res in self.models.items()
            },
        }


def make_folds(cohort: Cohort, k: int, seed: int) -> FoldAssignment:
    """Partition subject ids into k folds, stratified by event status."""
    if k < 2:
        raise DataError(f"k must be at least 2, got {k}")
    events = [s.id for s in cohort if s.event]
    censored = [s.id for s in cohort if not s.event]
    if len(events) < k or len(censored) < k:
        raise DataError(
            f"k={k} exceeds a stratum size (events={len(events)}, censored={len(censored)})"
        )
    rng = np.random.default_rng(seed)
    events = [events[i] for i in rng.permutation(len(events))]
    censored = [censored[i] for i in rng.permutation(len(censored))]
    fold_of = {}
    for i, sid in enumerate(events):
        fold_of[sid] = i % k
    for i, sid in enumerate(censored):
        fold_of[sid] = i % k
    return FoldAssignment(k=k, seed=seed, fold_of=fold_of)


def default_tau_grid(cohort: Cohort) -> tuple:
    """Yearly horizons 1..floor(max follow-up)."""
    top = int(np.floor(cohort.times().max()))
    if top < 1:
        raise DataError("follow-up shorter than one year; supply tau_grid explicitly")
    return tuple(float(t) for t in range(1, top + 1))


def _evaluate_fold(model, train: Cohort, test: Cohort, fold: int, tau_grid, roc_times):
    result = FoldResult(fold=fold, n_test=len(test), n_test_events=test.n_events)
    try:
        fitted = model.fit(train)
    except HdRiskcastError as exc:
        result.error = f"fit failed: {exc}"
        return result

    if model.horizon_dependent:
        scores = lambda tau: model.score_values(fitted, test, tau)  # noqa: E731
    else:
        scores = model.score_values(fitted, test)
    try:
        profile = uno_c_profile(scores, test, tau_grid)
        result.uno_by_tau = {r.tau: r.value for r in profile}
        result.global_uno = global_uno_c(profile)
    except DataError as exc:
        result.error = f"concordance failed: {exc}"
        return result
    for t in roc_times:
        t_scores = scores(t) if callable(scores) else scores
        try:
            curve = km_roc(t_scores, test, t)
        except DataError as exc:
            warnings.warn(f"fold {fold}: ROC at t={t:g} skipped: {exc}", stacklevel=2)
            continue
        result.auc_by_time[t] = curve.auc
    return result


def run_cv(
    cohort: Cohort,
    models,
    k: int = 5,
    seed: int = 0,
    tau_grid=None,
    roc_times=DEFAULT_ROC_TIMES,
    n_jobs: int = 1,
) -> CvReport:
    """Fit each model on k-1 folds and evaluate on the held-out fold.

    Per-tau and global concordance and per-time ROC AUC are averaged across
    folds with equal weight. A model whose fit fails in some fold keeps the
    failure in that fold's record (with a warning) and is averaged over the
    remaining folds; failing in every fold raises.
    """
    assignment = make_folds(cohort, k, seed)
    if tau_grid is None:
        tau_grid = default_tau_grid(cohort)
    tau_grid = tuple(float(t) for t in tau_grid)
    roc_times = tuple(float(t) for t in roc_times)

    subjects_by_fold = {f: [] for f in range(k)}
    for s in cohort:
        subjects_by_fold[assignment.fold_of[s.id]].append(s)
    splits = []
    for f in range(k):
        test = Cohort(tuple(subjects_by_fold[f]), provenance=f"{cohort.provenance}[fold {f}]")
        train_subjects = tuple(s for s in cohort if assignment.fold_of[s.id] != f)
        train = Cohort(train_subjects, provenance=f"{cohort.provenance}[not fold {f}]")
        splits.append((train, test))

    report = CvReport(k=k, seed=seed, tau_grid=tau_grid, roc_times=roc_times, models={})
    for model in models:
        if n_jobs > 1:
            with ThreadPoolExecutor(max_workers=n_jobs) as pool:
                folds = list(
                    pool.map(
                        lambda args: _evaluate_fold(model, *args),
                        [(train, test, f, tau_grid, roc_times) for f, (train, test) in enumerate(splits)],
                    )
                )
        else:
            folds = [
                _evaluate_fold(model, train, test, f, tau_grid, roc_times)
                for f, (train, test) in enumerate(splits)
            ]
        usable = [f for f in folds if f.error is None]
        for f in folds:
            if f.error is not None:
                warnings.warn(f"model {model.name}, fold {f.fold}: {f.error}", stacklevel=2)
        if not usable:
            raise NumericalError(f"model {model.name} failed in every fold")
        mean_uno = {}
        for tau in tau_grid:
            vals = [f.uno_by_tau[tau] for f in usable if tau in f.uno_by_tau]
            if vals:
                mean_uno[tau] = float(np.mean(vals))
        mean_auc = {}
        for t in roc_times:
            vals = [f.auc_by_time[t] for f in usable if t in f.auc_by_time]
            if vals:
                mean_auc[t] = float(np.mean(vals))
        report.models[model.name] = ModelCvResult(
            model=model.name,
            folds=folds,
            mean_uno_by_tau=mean_uno,
            mean_global_uno=float(np.mean([f.global_uno for f in usable])),
            mean_auc_by_time=mean_auc,
        )
    return report
