"""Product-limit estimators for event and censoring survival functions.

`km_fit` estimates S(t) = Pr(diagnosis time > t); `censoring_km_fit`
estimates G(c) = Pr(censoring time > c) by swapping the roles of events and
censorings (reverse Kaplan-Meier). Both curves are right-continuous step
functions.

Tie convention: at a shared observed time, diagnoses happen before
censorings. For S(t) this is the standard rule (subjects censored at t stay
in the risk set for events at t). For G(c) the same ordering means subjects
diagnosed at t have already left observation and are removed from the
censoring risk set before censorings at t are processed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cohort import Cohort, Subject
from .errors import DataError

# Above this size, survival products are accumulated in log space.
_LOG_SPACE_THRESHOLD = 10_000


@dataclass(frozen=True)
class KmCurve:
    """Step-function survival estimate.

    `times` holds the distinct jump times (times with at least one event),
    `survival` the estimate just after each jump. `at_risk` and `n_events`
    record the risk-set size and event count used at each jump.
    """

    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    n_events: np.ndarray
    n_subjects: int

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "survival", np.asarray(self.survival, dtype=float))
        object.__setattr__(self, "at_risk", np.asarray(self.at_risk, dtype=int))
        object.__setattr__(self, "n_events", np.asarray(self.n_events, dtype=int))

    @property
    def is_empty(self) -> bool:
        return self.n_subjects == 0


class CensoringKm(KmCurve):
    """Kaplan-Meier curve for the censoring distribution (reverse KM)."""


def _product_limit(factors: np.ndarray, n_subjects: int) -> np.ndarray:
    if n_subjects > _LOG_SPACE_THRESHOLD:
        with np.errstate(divide="ignore"):
            log_surv = np.cumsum(np.log(factors))
        return np.exp(log_surv)
    return np.cumprod(factors)


def _fit(times: np.ndarray, flags: np.ndarray, reverse: bool) -> tuple:
    """Shared product-limit core.

    flags marks diagnosis events. With reverse=False the jumps are at event
    times over the full risk set; with reverse=True the jumps are at
    censoring times over the risk set minus same-time events.
    """
    order = np.argsort(times, kind="stable")
    t_sorted = times[order]
    f_sorted = flags[order]
    unique_times, start = np.unique(t_sorted, return_index=True)
    counts = np.diff(np.concatenate([start, [t_sorted.size]]))
    d = np.add.reduceat(f_sorted.astype(int), start)  # diagnoses per time
    c = counts - d  # censorings per time
    n_at_risk = t_sorted.size - start  # |{W >= t}| per unique time

    if reverse:
        jumps = c
        risk = n_at_risk - d
    else:
        jumps = d
        risk = n_at_risk

    keep = jumps > 0
    jump_times = unique_times[keep]
    jump_risk = risk[keep]
    jump_counts = jumps[keep]
    with np.errstate(invalid="ignore"):
        factors = 1.0 - jump_counts / jump_risk
    survival = _product_limit(factors, times.size)
    return jump_times, survival, jump_risk, jump_counts


def empty_km_curve() -> KmCurve:
    """The distinguished curve of an empty selection."""
    return KmCurve(np.empty(0), np.empty(0), np.empty(0, dtype=int), np.empty(0, dtype=int), 0)


def km_curve_from_arrays(times: np.ndarray, events: np.ndarray) -> KmCurve:
    """Product-limit estimate from raw (time, event) arrays.

    Returns the distinguished empty curve for zero-length input.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    if times.size == 0:
        return empty_km_curve()
    jump_times, survival, at_risk, n_events = _fit(times, events, reverse=False)
    return KmCurve(jump_times, survival, at_risk, n_events, times.size)


def km_fit(cohort: Cohort) -> KmCurve:
    """Product-limit estimate of the diagnosis-time survival function.

    Examples
    --------
    Three diagnoses at times 1, 2, 3 give the empirical survival function
    S(1)=2/3, S(2)=1/3, S(3)=0.
    """
    if not len(cohort):
        raise DataError("km_fit requires a non-empty cohort")
    return km_curve_from_arrays(cohort.times(), cohort.events())


def km_fit_conditional(cohort: Cohort, predicate: Callable[[Subject], bool]) -> KmCurve:
    """km_fit restricted to subjects satisfying `predicate`.

    An empty selection returns a distinguished empty curve; consumers that
    weight conditional survival by group probability treat its products
    as 0.
    """
    selected = tuple(s for s in cohort if predicate(s))
    if not selected:
        return empty_km_curve()
    return km_fit(Cohort(selected, provenance=cohort.provenance))


def censoring_km_fit(cohort: Cohort) -> CensoringKm:
    """Reverse Kaplan-Meier estimate of the censoring survival function G."""
    if not len(cohort):
        raise DataError("censoring_km_fit requires a non-empty cohort")
    times, survival, at_risk, n_events = _fit(cohort.times(), cohort.events(), reverse=True)
    return CensoringKm(times, survival, at_risk, n_events, len(cohort))


def km_eval(curve: KmCurve, t) -> float:
    """Right-continuous evaluation of a curve at time t >= 0.

    Times before the first jump return 1; times past the last jump return
    the value at the last jump.
    """
    t = float(t)
    if t < 0:
        raise DataError(f"survival curves are defined for t >= 0, got {t}")
    idx = int(np.searchsorted(curve.times, t, side="right"))
    if idx == 0:
        return 1.0
    return float(curve.survival[idx - 1])


def km_eval_many(curve: KmCurve, ts) -> np.ndarray:
    """Vectorized `km_eval`."""
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0):
        raise DataError("survival curves are defined for t >= 0")
    idx = np.searchsorted(curve.times, ts, side="right")
    out = np.ones(ts.shape, dtype=float)
    nonzero = idx > 0
    out[nonzero] = curve.survival[idx[nonzero] - 1]
    return out


def km_eval_left(curve: KmCurve, t) -> float:
    """Left limit of the step function at t: jumps at t itself are excluded."""
    t = float(t)
    if t < 0:
        raise DataError(f"survival curves are defined for t >= 0, got {t}")
    idx = int(np.searchsorted(curve.times, t, side="left"))
    if idx == 0:
        return 1.0
    return float(curve.survival[idx - 1])
