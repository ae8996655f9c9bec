"""Trial enrichment planning from time-dependent ROC curves.

For a candidate trial duration t, the enrollment threshold is the score
cutoff maximizing Youden's J = TPR - FPR on the censoring-adjusted ROC
curve at t. The expected untreated-arm diagnosis rate is one minus the
conditional Kaplan-Meier survival at t among subjects above the threshold,
and per-arm sample sizes follow the pooled-variance normal-approximation
test of two proportions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .cohort import Cohort
from .errors import DataError
from .kaplan_meier import km_curve_from_arrays, km_eval
from .metrics import RocCurve, _score_values, km_roc


@dataclass(frozen=True)
class ArmSize:
    effect: float  # relative reduction of the diagnosis rate
    treated_rate: float
    n_per_arm: int


@dataclass(frozen=True)
class EnrichmentPlan:
    model: str
    t: float
    q_star: float
    youden: float
    diagnosis_rate: float
    arms: tuple[ArmSize, ...]
    power: float
    alpha: float


def optimal_threshold(curve: RocCurve) -> tuple[float, float]:
    """Threshold maximizing J = tpr - fpr; ties go to the largest threshold
    (most restrictive enrollment)."""
    if not curve.points:
        raise DataError("empty ROC curve")
    best_q = None
    best_j = -np.inf
    for point in curve.points:
        j = point.tpr - point.fpr
        if j > best_j or (j == best_j and point.threshold > best_q):
            best_j = j
            best_q = point.threshold
    return float(best_q), float(best_j)


def diagnosis_rate(scores, cohort: Cohort, q_star: float, t: float) -> float:
    """1 - S(t | score > q_star) from conditional Kaplan-Meier."""
    values = _score_values(scores, cohort)
    enrolled = values > q_star
    if not enrolled.any():
        raise DataError(f"no subject scores above threshold {q_star:g}")
    times = cohort.times()[enrolled]
    events = cohort.events()[enrolled]
    if t > times.max():
        raise DataError(
            f"t={t:g} exceeds the enrolled group's follow-up ({times.max():g}); "
            "survival is not estimable there"
        )
    return 1.0 - km_eval(km_curve_from_arrays(times, events), t)


def per_arm_n(p1: float, effect: float, power: float = 0.80, alpha: float = 0.05) -> int:
    """Per-arm size for a two-sided two-proportion test at p2 = p1*(1-effect).

    Pooled-variance normal approximation:
      n = ceil( (z_{1-a/2} sqrt(2 pbar qbar) + z_pow sqrt(p1 q1 + p2 q2))^2
                / (p1 - p2)^2 )
    """
    if not 0.0 < p1 < 1.0:
        raise DataError(f"baseline rate must be in (0, 1), got {p1}")
    if not 0.0 < effect < 1.0:
        raise DataError(f"effect must be in (0, 1), got {effect}")
    if not 0.0 < power < 1.0 or not 0.0 < alpha < 1.0:
        raise DataError("power and alpha must be in (0, 1)")
    p2 = p1 * (1.0 - effect)
    pbar = (p1 + p2) / 2.0
    qbar = 1.0 - pbar
    z_alpha = norm.ppf(1.0 - alpha / 2.0)
    z_power = norm.ppf(power)
    numerator = (
        z_alpha * math.sqrt(2.0 * pbar * qbar)
        + z_power * math.sqrt(p1 * (1.0 - p1) + p2 * (1.0 - p2))
    ) ** 2
    return math.ceil(numerator / (p1 - p2) ** 2)


def build_plan(
    model: str,
    scores,
    cohort: Cohort,
    durations,
    effects=(0.30, 0.40, 0.50),
    power: float = 0.80,
    alpha: float = 0.05,
) -> list[EnrichmentPlan]:
    """One plan per trial duration: ROC at t, Youden-optimal threshold,
    untreated-arm rate, and per-arm n for each effect size.

    `scores` may be a callable t -> scores when the model's risk ordering
    depends on the horizon.
    """
    plans = []
    for t in durations:
        t = float(t)
        t_scores = scores(t) if callable(scores) else scores
        curve = km_roc(t_scores, cohort, t)
        q_star, youden = optimal_threshold(curve)
        p1 = diagnosis_rate(t_scores, cohort, q_star, t)
        if not 0.0 < p1 < 1.0:
            raise DataError(
                f"untreated-arm rate {p1:g} at t={t:g} is degenerate; cannot size arms"
            )
        arms = tuple(
            ArmSize(
                effect=float(e),
                treated_rate=p1 * (1.0 - float(e)),
                n_per_arm=per_arm_n(p1, float(e), power=power, alpha=alpha),
            )
            for e in effects
        )
        plans.append(
            EnrichmentPlan(
                model=model,
                t=t,
                q_star=q_star,
                youden=youden,
                diagnosis_rate=p1,
                arms=arms,
                power=power,
                alpha=alpha,
            )
        )
    return plans
