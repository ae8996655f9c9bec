"""Censoring-adjusted discrimination metrics.

Uno's concordance statistic reweights comparable pairs by the inverse
squared censoring survival G(W_i), estimated by reverse Kaplan-Meier on the
same data being evaluated. Time-dependent ROC curves use the Kaplan-Meier
plug-in estimators of TPR/FPR, which adjust the naive sample proportions
for censoring; their points can be non-monotone and are clipped to [0, 1]
but never monotonized.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cohort import Cohort
from .errors import DataError
from .kaplan_meier import (
    censoring_km_fit,
    km_curve_from_arrays,
    km_eval,
    km_eval_left,
    km_eval_many,
    km_fit,
)

# Cohorts at or below this size use the direct pairwise sum; larger ones the
# O(n log n) sorted sweep. Both paths are exact, including under ties.
_SWEEP_THRESHOLD = 256


@dataclass(frozen=True)
class UnoCResult:
    """Time-restricted concordance at horizon tau.

    weight_mass is the fraction of observed diagnoses occurring at or before
    tau; profile aggregation turns consecutive differences of this mass into
    the weights of the global statistic.
    """

    tau: float
    value: float
    n_comparable_pairs: int
    weight_mass: float


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float


@dataclass(frozen=True)
class RocCurve:
    t: float
    points: tuple[RocPoint, ...]
    auc: float


def _score_values(scores, cohort: Cohort | None = None) -> np.ndarray:
    """Accept raw arrays or lists of score objects; check cohort alignment."""
    if isinstance(scores, np.ndarray):
        values = scores.astype(float)
        ids = None
    else:
        seq = list(scores)
        if seq and hasattr(seq[0], "score"):
            values = np.array([s.score for s in seq], dtype=float)
            ids = [s.subject_id for s in seq]
        elif seq and hasattr(seq[0], "conditional_probability"):
            values = np.array([s.conditional_probability for s in seq], dtype=float)
            ids = [s.subject_id for s in seq]
        else:
            values = np.array(seq, dtype=float)
            ids = None
    if cohort is not None:
        if len(values) != len(cohort):
            raise DataError(f"{len(values)} scores for {len(cohort)} subjects")
        if ids is not None and ids != [s.id for s in cohort]:
            raise DataError("score subject ids do not align with the cohort")
    if not np.all(np.isfinite(values)):
        raise DataError("scores must be finite")
    return values


class _Fenwick:
    """Binary indexed tree over score ranks; counts inserted values."""

    def __init__(self, size: int):
        self.tree = np.zeros(size + 1, dtype=np.int64)
        self.size = size

    def add(self, rank: int) -> None:
        i = rank + 1
        while i <= self.size:
            self.tree[i] += 1
            i += i & (-i)

    def count_below(self, rank: int) -> int:
        """Number of inserted ranks strictly less than `rank`."""
        i = rank
        total = 0
        while i > 0:
            total += self.tree[i]
            i -= i & (-i)
        return int(total)


def _uno_terms_pairs(times, events, values, tau, weights, ties):
    n = times.size
    lt = times[:, None] < times[None, :]  # W_i < W_j
    eligible = events & (times < tau)
    pair_mask = lt & eligible[:, None]
    comparable = pair_mask.sum(axis=1)
    conc = (values[:, None] > values[None, :]) & pair_mask
    num_counts = conc.sum(axis=1).astype(float)
    if ties == "half":
        tied = (values[:, None] == values[None, :]) & pair_mask
        num_counts += 0.5 * tied.sum(axis=1)
    numerator = float((weights * num_counts)[eligible].sum())
    denominator = float((weights * comparable)[eligible].sum())
    return numerator, denominator, int(comparable[eligible].sum())


def _uno_terms_sweep(times, events, values, tau, weights, ties):
    """Descending-time sweep: when subject i is processed, the tree holds
    exactly the subjects with W strictly greater than W_i."""
    ranks = {v: r for r, v in enumerate(np.unique(values))}
    rank = np.array([ranks[v] for v in values], dtype=np.int64)
    n_ranks = len(ranks)
    order = np.argsort(times, kind="stable")[::-1]
    tree = _Fenwick(n_ranks)
    inserted = 0
    numerator = 0.0
    denominator = 0.0
    n_pairs = 0
    i = 0
    while i < len(order):
        j = i
        t_i = times[order[i]]
        while j < len(order) and times[order[j]] == t_i:
            j += 1
        group = order[i:j]
        for idx in group:
            if events[idx] and t_i < tau:
                larger = inserted
                below = tree.count_below(rank[idx])
                w = weights[idx]
                denominator += w * larger
                contribution = below
                if ties == "half":
                    at = tree.count_below(rank[idx] + 1) - below
                    contribution = below + 0.5 * at
                numerator += w * contribution
                n_pairs += larger
        for idx in group:
            tree.add(rank[idx])
            inserted += 1
        i = j
    return numerator, denominator, n_pairs


def uno_c(
    scores,
    cohort: Cohort,
    tau: float,
    ties: str = "strict",
    method: str = "auto",
) -> UnoCResult:
    """Inverse-censoring-weighted concordance restricted to horizon tau.

    A pair (i, j) contributes when subject i is diagnosed before tau and
    strictly before W_j; its weight is G(W_i)^-2 with G the reverse
    Kaplan-Meier censoring curve of this cohort. Score ties count 0 under
    'strict' and 0.5 under 'half'.
    """
    if ties not in ("strict", "half"):
        raise DataError(f"unknown tie mode {ties!r}")
    if method not in ("auto", "pairs", "sweep"):
        raise DataError(f"unknown method {method!r}")
    values = _score_values(scores, cohort)
    times = cohort.times()
    events = cohort.events()
    tau = float(tau)

    # Contributing pairs have W_i strictly before tau, so the weights only
    # read G on [0, tau); enforce positivity there via the left limit.
    g_curve = censoring_km_fit(cohort)
    if km_eval_left(g_curve, tau) <= 0.0:
        raise DataError(f"censoring survival G({tau:g}-) = 0; pick a smaller horizon")
    g_at_w = km_eval_many(g_curve, times)
    weights = np.zeros_like(g_at_w)
    positive = g_at_w > 0
    weights[positive] = 1.0 / g_at_w[positive] ** 2

    use_sweep = method == "sweep" or (method == "auto" and len(cohort) > _SWEEP_THRESHOLD)
    terms = _uno_terms_sweep if use_sweep else _uno_terms_pairs
    numerator, denominator, n_pairs = terms(times, events, values, tau, weights, ties)
    if denominator <= 0.0:
        raise DataError(f"no comparable pairs at tau = {tau:g}")

    n_events_total = int(events.sum())
    mass = float(((times <= tau) & events).sum() / n_events_total) if n_events_total else 0.0
    return UnoCResult(
        tau=tau,
        value=numerator / denominator,
        n_comparable_pairs=n_pairs,
        weight_mass=mass,
    )


def uno_c_profile(
    scores,
    cohort: Cohort,
    tau_grid: Sequence[float],
    ties: str = "strict",
    method: str = "auto",
) -> list[UnoCResult]:
    """Element-wise uno_c over a sorted horizon grid.

    Horizons where G(tau) = 0 or where no pair is comparable are dropped
    with a warning. `scores` may be a callable tau -> scores for models
    whose risk ordering depends on the evaluation horizon.
    """
    tau_grid = [float(t) for t in tau_grid]
    if tau_grid != sorted(tau_grid):
        raise DataError("tau_grid must be sorted ascending")
    results = []
    for tau in tau_grid:
        tau_scores = scores(tau) if callable(scores) else scores
        try:
            results.append(uno_c(tau_scores, cohort, tau, ties=ties, method=method))
        except DataError as exc:
            warnings.warn(f"dropping tau={tau:g}: {exc}", stacklevel=2)
    if not results:
        raise DataError("no tau value in the grid is evaluable")
    return results


def global_uno_c(profile: Sequence[UnoCResult]) -> float:
    """Weighted mean of time-specific values.

    Weights are the empirical diagnosis-time mass falling in the interval
    that ends at each horizon, recovered from consecutive differences of
    the stored cumulative masses.
    """
    if not profile:
        raise DataError("empty profile")
    previous = 0.0
    num = 0.0
    total = 0.0
    for result in profile:
        w = result.weight_mass - previous
        previous = result.weight_mass
        num += w * result.value
        total += w
    if total <= 0.0:
        raise DataError("all profile weights are zero")
    return num / total


def km_roc(scores, cohort: Cohort, t: float) -> RocCurve:
    """Kaplan-Meier-adjusted time-dependent ROC curve at time t.

    Thresholds sweep the unique observed scores plus a -inf anchor. For each
    threshold q, the positive group is {score > q}; group survival comes
    from conditional Kaplan-Meier curves, with empty groups contributing
    zero probability-weighted mass. Points are clipped to [0, 1].
    """
    values = _score_values(scores, cohort)
    t = float(t)
    times = cohort.times()
    events = cohort.events()
    marginal = km_fit(cohort)
    s_t = km_eval(marginal, t)
    if s_t <= 0.0 or s_t >= 1.0:
        raise DataError(f"marginal survival at t={t:g} is {s_t:g}; ROC undefined")

    thresholds = np.concatenate([[-np.inf], np.unique(values)])
    points = []
    for q in thresholds:
        high = values > q
        p_high = high.mean()
        p_low = 1.0 - p_high
        if p_high > 0:
            s_high = km_eval(km_curve_from_arrays(times[high], events[high]), t)
            tpr = (1.0 - s_high) * p_high / (1.0 - s_t)
        else:
            tpr = 0.0  # empty group: probability-weighted mass is zero
        if p_low > 0:
            s_low = km_eval(km_curve_from_arrays(times[~high], events[~high]), t)
            fpr = 1.0 - s_low * p_low / s_t
        else:
            fpr = 1.0
        points.append(
            RocPoint(float(q), float(np.clip(tpr, 0.0, 1.0)), float(np.clip(fpr, 0.0, 1.0)))
        )
    points = _integration_order(points)
    auc = _trapezoid(points)
    return RocCurve(t=t, points=tuple(points), auc=auc)


def _integration_order(points) -> list:
    # fpr ties are detected at 1e-12 so ulp-level jitter from the survival
    # products cannot reorder a staircase step; true fpr values still drive
    # the trapezoid widths.
    return sorted(points, key=lambda pt: (round(pt.fpr, 12), pt.tpr))


def _trapezoid(points) -> float:
    area = 0.0
    for a, b in zip(points[:-1], points[1:]):
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0
    return area


def roc_auc(curve: RocCurve) -> float:
    """Trapezoidal area under the points, sorted by fpr with ties by tpr."""
    if len(curve.points) < 2:
        raise DataError("roc_auc needs at least two points")
    return _trapezoid(_integration_order(list(curve.points)))
