"""Synthetic prodromal-HD cohort generator.

Covariate marginals default to the baseline statistics of large prodromal
observational samples (CAG near 43, enrollment age in the mid-30s, mostly
low DCL). A single latent severity variable drives the motor score upward
and the cognitive scores downward and sets DCL through thresholds, giving
realistic covariate correlations without positing a full correlation
matrix. Event times come from a chosen ground-truth model (log-logistic AFT
on {Age*CAG, Age}, or a Cox model on the 13-term motor/cognitive design
with a Weibull baseline); censoring is the minimum of an administrative
horizon and exponential dropout.

All draws flow from one seeded PCG64 generator, so cohorts are reproducible
bit-for-bit given the spec.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm, truncnorm

from .cohort import Cohort, Subject
from .cox import build_design, mrs_design
from .errors import DataError

_CALIBRATION_SEED = 20240613
_CALIBRATION_N = 20_000


@dataclass(frozen=True)
class AftTruth:
    """log T = b0 + b1*Age*(CAG + b2) + sigma*logistic."""

    b0: float = 5.0
    b1: float = -0.0075
    b2: float = -34.0
    sigma: float = 0.5


@dataclass(frozen=True)
class CoxMrsTruth:
    """Weibull-baseline proportional hazards on the 13-term design.

    The linear predictor is centered before use so `baseline_scale` sets the
    time scale of a typical subject directly.
    """

    beta: tuple[float, ...] = (
        0.5, 1.0, 1.4,          # dcl1..3
        0.06,                   # tms
        -0.010, -0.008, -0.015, # stroop color/word/interference
        -0.030,                 # sdmt
        0.12, 0.04,             # cag, age
        -0.0005,                # tms^2
        0.001, 0.0015,          # cag*tms, cag*age
    )
    baseline_shape: float = 2.0
    baseline_scale: float = 16.0

    def __post_init__(self):
        if len(self.beta) != 13:
            raise DataError(f"CoxMrsTruth needs 13 coefficients, got {len(self.beta)}")


@dataclass(frozen=True)
class SimSpec:
    """Cohort size, covariate targets, ground truth, and censoring knobs."""

    n: int
    seed: int
    truth: AftTruth | CoxMrsTruth = field(default_factory=CoxMrsTruth)
    # covariate targets
    cag_mean: float = 43.2
    cag_sd: float = 2.2
    cag_min: int = 40
    cag_max: int = 50
    age_mean: float = 36.3
    age_sd: float = 9.9
    age_min: float = 18.0
    age_max: float = 75.0
    dcl_probs: tuple[float, float, float, float] = (0.53, 0.25, 0.12, 0.10)
    sex_female_p: float = 0.587
    # censoring mechanism
    admin_horizon: float = 8.0
    dropout_hazard: float = 0.09
    target_censoring_rate: float | None = None

    def __post_init__(self):
        if self.n <= 0:
            raise DataError("n must be positive")
        if not self.admin_horizon > 0:
            raise DataError("admin_horizon must be positive")
        if self.dropout_hazard < 0:
            raise DataError("dropout_hazard must be non-negative")
        if abs(sum(self.dcl_probs) - 1.0) > 1e-9 or min(self.dcl_probs) < 0:
            raise DataError("dcl_probs must be a probability vector")
        if not 0 <= self.sex_female_p <= 1:
            raise DataError("sex_female_p must be in [0, 1]")


def _match_discrete_mean(target, sd, lo, hi):
    """Location of a discretized normal on {lo..hi} whose mean hits target."""
    support = np.arange(lo, hi + 1, dtype=float)

    def mean_at(loc):
        w = np.exp(-0.5 * ((support - loc) / sd) ** 2)
        return float((support * w).sum() / w.sum())

    a, b = lo - 3 * sd, hi + 3 * sd
    if not (mean_at(a) <= target <= mean_at(b)):
        raise DataError(f"target mean {target} unreachable on support [{lo}, {hi}]")
    for _ in range(200):
        mid = (a + b) / 2
        if mean_at(mid) < target:
            a = mid
        else:
            b = mid
    loc = (a + b) / 2
    w = np.exp(-0.5 * ((support - loc) / sd) ** 2)
    return support.astype(int), w / w.sum()


def _match_truncnorm_mean(target, sd, lo, hi):
    """Location of a truncated normal on [lo, hi] whose mean hits target."""

    def mean_at(loc):
        a, b = (lo - loc) / sd, (hi - loc) / sd
        return float(truncnorm.mean(a, b, loc=loc, scale=sd))

    a, b = lo - 3 * sd, hi + 3 * sd
    for _ in range(200):
        mid = (a + b) / 2
        if mean_at(mid) < target:
            a = mid
        else:
            b = mid
    return (a + b) / 2


def _draw_covariates(spec: SimSpec, rng: np.random.Generator):
    n = spec.n
    support, probs = _match_discrete_mean(spec.cag_mean, spec.cag_sd, spec.cag_min, spec.cag_max)
    cag = rng.choice(support, size=n, p=probs)

    loc = _match_truncnorm_mean(spec.age_mean, spec.age_sd, spec.age_min, spec.age_max)
    a, b = (spec.age_min - loc) / spec.age_sd, (spec.age_max - loc) / spec.age_sd
    age = truncnorm.rvs(a, b, loc=loc, scale=spec.age_sd, size=n, random_state=rng)

    severity = rng.normal(0.0, 1.0, n)
    cuts = norm.ppf(np.cumsum(spec.dcl_probs[:-1]))
    dcl = np.digitize(severity, cuts)

    tms = np.clip(4.2 + 3.5 * severity + rng.normal(0.0, 2.5, n), 0.0, None)
    sdmt = np.clip(48.0 - 8.0 * severity + rng.normal(0.0, 9.0, n), 0.0, None)
    word = np.clip(91.0 - 12.0 * severity + rng.normal(0.0, 14.0, n), 0.0, None)
    color = np.clip(71.0 - 10.0 * severity + rng.normal(0.0, 11.0, n), 0.0, None)
    interference = np.clip(42.5 - 8.0 * severity + rng.normal(0.0, 9.0, n), 0.0, None)
    sex = np.where(rng.uniform(size=n) < spec.sex_female_p, "female", "male")
    return dict(
        cag=cag,
        age=age,
        dcl=dcl,
        tms=tms,
        sdmt=sdmt,
        stroop_word=word,
        stroop_color=color,
        stroop_interference=interference,
        sex=sex,
    )


def _draw_event_times(spec: SimSpec, cov, rng: np.random.Generator) -> np.ndarray:
    if isinstance(spec.truth, AftTruth):
        tr = spec.truth
        lp = tr.b0 + tr.b1 * cov["age"] * (cov["cag"] + tr.b2)
        return np.exp(lp + tr.sigma * rng.logistic(size=spec.n))
    tr = spec.truth
    placeholder = _subjects_from_arrays(cov, np.ones(spec.n), np.zeros(spec.n, dtype=bool))
    design = build_design(mrs_design(), Cohort(placeholder))
    lp = design @ np.asarray(tr.beta)
    lp = lp - lp.mean()
    # invert the Weibull cumulative hazard (t/scale)^shape scaled by exp(lp)
    u = rng.uniform(size=spec.n)
    return tr.baseline_scale * (-np.log(u) * np.exp(-lp)) ** (1.0 / tr.baseline_shape)


def _subjects_from_arrays(cov, times, events):
    subjects = []
    for i in range(len(times)):
        subjects.append(
            Subject(
                id=f"sim{i:06d}",
                age_enroll=float(cov["age"][i]),
                cag=int(cov["cag"][i]),
                dcl=int(cov["dcl"][i]),
                time=float(times[i]),
                event=bool(events[i]),
                tms=float(cov["tms"][i]),
                sdmt=float(cov["sdmt"][i]),
                stroop_word=float(cov["stroop_word"][i]),
                stroop_color=float(cov["stroop_color"][i]),
                stroop_interference=float(cov["stroop_interference"][i]),
                sex=str(cov["sex"][i]),
            )
        )
    return tuple(subjects)


def simulate(spec: SimSpec) -> Cohort:
    """Draw a cohort: covariates, true event time X, censoring C = min(admin
    horizon, exponential dropout), observed W = min(X, C), event = X <= C."""
    rng = np.random.default_rng(spec.seed)
    cov = _draw_covariates(spec, rng)
    x = _draw_event_times(spec, cov, rng)
    # draw the standard exponentials unconditionally to keep the stream
    # aligned across different hazard values (common random numbers)
    std_exp = rng.standard_exponential(spec.n)
    if spec.dropout_hazard > 0:
        dropout = std_exp / spec.dropout_hazard
    else:
        dropout = np.full(spec.n, np.inf)
    c = np.minimum(spec.admin_horizon, dropout)
    w = np.minimum(x, c)
    events = x <= c
    w = np.maximum(w, 1e-9)  # guard against zero times from extreme draws
    return Cohort(
        _subjects_from_arrays(cov, w, events),
        provenance=f"simulated(seed={spec.seed}, n={spec.n})",
    )


def calibrate_censoring(spec: SimSpec, target: float) -> float:
    """Dropout hazard whose realized censoring rate hits `target` +/- 0.01.

    Uses bisection on a fixed-seed calibration cohort of 20,000 subjects.
    Administrative censoring alone bounds the achievable rate from below.
    """
    if not 0 < target < 1:
        raise DataError(f"target censoring rate must be in (0, 1), got {target}")

    def rate(hazard: float) -> float:
        probe = replace(
            spec, n=_CALIBRATION_N, seed=_CALIBRATION_SEED, dropout_hazard=hazard
        )
        return simulate(probe).censoring_rate

    floor = rate(0.0)
    if target < floor - 0.01:
        raise DataError(
            f"target {target:.3f} is below the administrative-only censoring rate {floor:.3f}"
        )
    if abs(floor - target) <= 0.01:
        return 0.0

    lo, hi = 0.0, 0.05
    for _ in range(60):
        if rate(hi) >= target:
            break
        hi *= 2.0
    else:
        raise DataError(f"cannot reach censoring rate {target:.3f} by dropout alone")
    for _ in range(80):
        mid = (lo + hi) / 2.0
        r = rate(mid)
        if abs(r - target) <= 0.01:
            return mid
        if r < target:
            lo = mid
        else:
            hi = mid
    raise DataError(f"calibration failed to reach {target:.3f} within tolerance")
