"""Parametric logistic model of age at HD diagnosis as a function of CAG.

Age at diagnosis is modeled as logistic with CAG-dependent mean
mu(CAG) = b0 + exp(b1 - b2*CAG) and variance var(CAG) = g0 + exp(g1 - g2*CAG).
Fitting maximizes the right-censored log likelihood; because b2 tends to
collapse to its lower bound under joint optimization, it is profiled over a
fixed grid while the remaining five parameters are optimized numerically.

Subjects enter on the age scale: the age at diagnosis/censoring used in the
likelihood is age_enroll + time. Scoring converts back to the time scale by
asking for the conditional probability of diagnosis within a horizon of
enrollment, given undiagnosed at the enrollment age.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit
from scipy.stats import logistic

from .cohort import Cohort
from .errors import DataError, NumericalError

# pi/sqrt(3) converts between logistic scale and standard deviation.
_K = math.pi / math.sqrt(3.0)

DEFAULT_B2_GRID_SIZE = 50
DEFAULT_B2_BOUNDS = (0.05, 0.5)

_NM_OPTIONS = {"fatol": 1e-8, "xatol": 1e-6, "maxiter": 2000, "maxfev": 4000}


@dataclass(frozen=True)
class LangbehnParams:
    """Mean-function (b0,b1,b2) and variance-function (g0,g1,g2) parameters."""

    b0: float
    b1: float
    b2: float
    g0: float
    g1: float
    g2: float

    def __post_init__(self):
        if not self.b2 > 0:
            raise DataError(f"b2 must be positive, got {self.b2}")
        if not self.g2 > 0:
            raise DataError(f"g2 must be positive, got {self.g2}")

    def mean_age(self, cag) -> np.ndarray:
        return self.b0 + np.exp(self.b1 - self.b2 * np.asarray(cag, dtype=float))

    def variance(self, cag) -> np.ndarray:
        return self.g0 + np.exp(self.g1 - self.g2 * np.asarray(cag, dtype=float))

    def scale(self, cag) -> np.ndarray:
        """Logistic scale parameter sqrt(3*var)/pi."""
        var = self.variance(cag)
        if np.any(var <= 0):
            raise NumericalError(f"non-positive variance at cag={cag}")
        return np.sqrt(var) / _K


@dataclass(frozen=True)
class LangbehnScore:
    """Conditional probability of diagnosis by `horizon_age` for one subject."""

    subject_id: str
    current_age: float
    horizon_age: float
    conditional_probability: float


def langbehn_cdf(params: LangbehnParams, x, cag):
    """Probability of diagnosis by age x given CAG repeats."""
    scale = params.scale(cag)
    z = (np.asarray(x, dtype=float) - params.mean_age(cag)) / scale
    result = expit(z)
    return float(result) if np.isscalar(x) and np.isscalar(cag) else result


def langbehn_conditional(params: LangbehnParams, x_c, x_f, cag):
    """Probability of diagnosis by age x_f given undiagnosed at age x_c.

    Computed as 1 - (1 - F(x_f)) / (1 - F(x_c)); monotone non-decreasing in
    x_f and 0 at x_f = x_c.
    """
    x_c = np.asarray(x_c, dtype=float)
    x_f = np.asarray(x_f, dtype=float)
    if np.any(x_f < x_c):
        raise DataError("horizon age must not precede current age")
    scale = params.scale(cag)
    mean = params.mean_age(cag)
    if np.any(expit((x_c - mean) / scale) >= 1.0):
        raise NumericalError("current age is past the model's support (F(x_c) = 1)")
    # Survival ratio on the log scale for stability near the upper tail.
    log_sf_f = logistic.logsf(x_f, loc=mean, scale=scale)
    log_sf_c = logistic.logsf(x_c, loc=mean, scale=scale)
    result = -np.expm1(log_sf_f - log_sf_c)
    if result.ndim == 0:
        return float(result)
    return result


def _neg_loglik(theta, b2, ages, cags, events):
    b0, b1, g0, g1, g2 = theta
    if g2 <= 0:
        return 1e12
    var = g0 + np.exp(g1 - g2 * cags)
    if not np.all(np.isfinite(var)) or np.any(var <= 1e-8):
        return 1e12
    mean = b0 + np.exp(b1 - b2 * cags)
    if not np.all(np.isfinite(mean)):
        return 1e12
    scale = np.sqrt(var) / _K
    ll = np.where(
        events,
        logistic.logpdf(ages, loc=mean, scale=scale),
        logistic.logsf(ages, loc=mean, scale=scale),
    )
    total = ll.sum()
    return -total if np.isfinite(total) else 1e12


def _entry_adjustment(theta, b2, entry_ages, cags):
    b0, b1, g0, g1, g2 = theta
    var = g0 + np.exp(g1 - g2 * cags)
    mean = b0 + np.exp(b1 - b2 * cags)
    scale = np.sqrt(var) / _K
    return logistic.logsf(entry_ages, loc=mean, scale=scale).sum()


def default_b2_grid(
    n: int = DEFAULT_B2_GRID_SIZE, bounds: tuple[float, float] = DEFAULT_B2_BOUNDS
) -> np.ndarray:
    """Log-spaced profile grid for b2."""
    return np.geomspace(bounds[0], bounds[1], n)


def _initial_theta(init: LangbehnParams | None, b2: float, mean_cag, m0, v0):
    if init is not None:
        # Re-anchor b1 so mu at the mean CAG is unchanged at this grid point.
        b1 = init.b1 + (b2 - init.b2) * mean_cag
        return np.array([init.b0, b1, init.g0, init.g1, init.g2])
    g2 = b2 if b2 > 0.1 else 0.2
    return np.array(
        [
            m0 / 2,
            math.log(m0 / 2) + b2 * mean_cag,
            v0 / 2,
            math.log(v0 / 2) + g2 * mean_cag,
            g2,
        ]
    )


def langbehn_fit(
    cohort: Cohort,
    b2_grid=None,
    init: LangbehnParams | None = None,
    condition_on_entry: bool = False,
) -> LangbehnParams:
    """Censoring-aware MLE of the logistic age-at-diagnosis model.

    For each b2 on the profile grid, the remaining five parameters are
    optimized by Nelder-Mead (restarted once from its own optimum); the grid
    point with the highest profiled likelihood wins.

    With `condition_on_entry` each subject's contribution is divided by the
    probability of being undiagnosed at the enrollment age (left-truncation
    adjustment); off by default.
    """
    if b2_grid is None:
        b2_grid = default_b2_grid()
    b2_grid = np.asarray(b2_grid, dtype=float)
    if b2_grid.size == 0:
        raise DataError("b2_grid must be non-empty")
    if np.any(b2_grid <= 0):
        raise DataError("b2 grid values must be positive")
    if not len(cohort):
        raise DataError("langbehn_fit requires a non-empty cohort")

    ages = np.array([s.age_enroll + s.time for s in cohort])
    cags = np.array([float(s.cag) for s in cohort])
    events = cohort.events()
    if not events.any():
        raise DataError("langbehn_fit requires at least one diagnosed subject")
    entry_ages = np.array([s.age_enroll for s in cohort])

    mean_cag = cags.mean()
    m0 = ages[events].mean()
    v0 = ages[events].var(ddof=1) if events.sum() > 1 else 25.0

    def objective(theta, b2):
        value = _neg_loglik(theta, b2, ages, cags, events)
        if condition_on_entry and value < 1e12:
            value += _entry_adjustment(theta, b2, entry_ages, cags)
        return value

    best = None
    for b2 in b2_grid:
        x0 = _initial_theta(init, b2, mean_cag, m0, v0)
        res = minimize(objective, x0, args=(b2,), method="Nelder-Mead", options=_NM_OPTIONS)
        res2 = minimize(objective, res.x, args=(b2,), method="Nelder-Mead", options=_NM_OPTIONS)
        if res2.fun < res.fun:
            res = res2
        if not (res.success and np.isfinite(res.fun) and res.fun < 1e11):
            continue
        if best is None or res.fun < best[0]:
            best = (res.fun, b2, res.x)
    if best is None:
        raise NumericalError("langbehn_fit failed to converge at every grid point")
    _, b2, (b0, b1, g0, g1, g2) = best
    return LangbehnParams(b0=b0, b1=b1, b2=float(b2), g0=g0, g1=g1, g2=g2)


def langbehn_loglik(params: LangbehnParams, cohort: Cohort) -> float:
    """Censored log likelihood of a cohort under given parameters."""
    ages = np.array([s.age_enroll + s.time for s in cohort])
    cags = np.array([float(s.cag) for s in cohort])
    events = cohort.events()
    theta = (params.b0, params.b1, params.g0, params.g1, params.g2)
    return -_neg_loglik(np.array(theta), params.b2, ages, cags, events)


def langbehn_score(params: LangbehnParams, cohort: Cohort, horizon: float):
    """Per-subject probability of diagnosis within `horizon` years of enrollment.

    Conditions on being undiagnosed at the enrollment age; used as the risk
    score proxy when comparing against models that emit log-risk scores.
    """
    if not horizon > 0:
        raise DataError(f"horizon must be positive, got {horizon}")
    scores = []
    for s in cohort:
        x_c = s.age_enroll
        x_f = s.age_enroll + horizon
        p = langbehn_conditional(params, x_c, x_f, s.cag)
        scores.append(LangbehnScore(s.id, x_c, x_f, float(p)))
    return scores
