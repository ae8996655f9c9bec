"""Cox proportional-hazards engine and the MRS/PIN design builders.

The partial likelihood is maximized by Newton-Raphson with analytic gradient
and Hessian, Efron's tie correction by default (Breslow available), and
step-halving whenever a step would decrease the likelihood. The cumulative
baseline hazard is estimated by the Breslow formula at the fitted
coefficients. Covariates are used on their raw scales throughout so that
externally published coefficients apply unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cap_aft import cap_transform
from .cohort import Cohort
from .errors import DataError, NumericalError

_MAX_ITER = 50
_REL_TOL = 1e-9
_MAX_HALVINGS = 10
_SEPARATION_BOUND = 50.0


@dataclass(frozen=True)
class Term:
    """One design-matrix column: a named transform of subject covariates.

    kind is one of 'identity', 'square', 'product', 'indicator', 'cap'.
    `fields` names the covariates consumed; `level` is the matched value for
    indicator terms.
    """

    label: str
    kind: str
    fields: tuple[str, ...]
    level: int | None = None

    def value(self, subject) -> float:
        if self.kind == "identity":
            return subject.covariate(self.fields[0])
        if self.kind == "square":
            return subject.covariate(self.fields[0]) ** 2
        if self.kind == "product":
            return subject.covariate(self.fields[0]) * subject.covariate(self.fields[1])
        if self.kind == "indicator":
            return 1.0 if getattr(subject, self.fields[0]) == self.level else 0.0
        if self.kind == "cap":
            return float(
                cap_transform(subject.covariate(self.fields[0]), subject.covariate(self.fields[1]))
            )
        raise DataError(f"unknown term kind {self.kind!r}")


@dataclass(frozen=True)
class DesignSpec:
    """Named, ordered list of design terms."""

    name: str
    terms: tuple[Term, ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(t.label for t in self.terms)


MRS_TERM_NAMES = (
    "dcl1",
    "dcl2",
    "dcl3",
    "tms",
    "stroop_color",
    "stroop_word",
    "stroop_interference",
    "sdmt",
    "cag",
    "age",
    "tms_sq",
    "cag_x_tms",
    "cag_x_age",
)

PIN_TERM_NAMES = ("tms", "sdmt", "cap")


def mrs_design() -> DesignSpec:
    """13-term motor/cognitive/genetic design with TMS^2 and CAG interactions."""
    return DesignSpec(
        "MRS",
        (
            Term("dcl1", "indicator", ("dcl",), 1),
            Term("dcl2", "indicator", ("dcl",), 2),
            Term("dcl3", "indicator", ("dcl",), 3),
            Term("tms", "identity", ("tms",)),
            Term("stroop_color", "identity", ("stroop_color",)),
            Term("stroop_word", "identity", ("stroop_word",)),
            Term("stroop_interference", "identity", ("stroop_interference",)),
            Term("sdmt", "identity", ("sdmt",)),
            Term("cag", "identity", ("cag",)),
            Term("age", "identity", ("age_enroll",)),
            Term("tms_sq", "square", ("tms",)),
            Term("cag_x_tms", "product", ("cag", "tms")),
            Term("cag_x_age", "product", ("cag", "age_enroll")),
        ),
    )


def pin_design() -> DesignSpec:
    """Three main effects: TMS, SDMT, and the CAG-age product."""
    return DesignSpec(
        "PIN",
        (
            Term("tms", "identity", ("tms",)),
            Term("sdmt", "identity", ("sdmt",)),
            Term("cap", "cap", ("age_enroll", "cag")),
        ),
    )


def build_design(spec: DesignSpec, cohort: Cohort) -> np.ndarray:
    """n x p design matrix, one row per subject in cohort order.

    Raises MissingCovariateError naming the subject and covariate when a
    required value is absent.
    """
    rows = np.empty((len(cohort), len(spec.terms)), dtype=float)
    for i, subject in enumerate(cohort):
        # cag is stored as int; covariate() promotes to float.
        rows[i] = [term.value(subject) for term in spec.terms]
    return rows


@dataclass(frozen=True)
class CoxFit:
    """Fitted coefficients plus the Breslow cumulative baseline hazard."""

    term_labels: tuple[str, ...]
    beta: np.ndarray
    baseline_times: np.ndarray
    baseline_cumhaz: np.ndarray
    loglik: float
    n_iter: int
    converged: bool

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        object.__setattr__(self, "baseline_times", np.asarray(self.baseline_times, dtype=float))
        object.__setattr__(self, "baseline_cumhaz", np.asarray(self.baseline_cumhaz, dtype=float))


@dataclass(frozen=True)
class RiskScore:
    subject_id: str
    score: float


def _tie_groups(times_sorted: np.ndarray):
    """Start/stop index pairs of equal-time runs in a sorted time vector."""
    n = times_sorted.size
    boundaries = np.flatnonzero(np.diff(times_sorted) != 0) + 1
    starts = np.concatenate([[0], boundaries])
    stops = np.concatenate([boundaries, [n]])
    return starts, stops


def partial_loglik_stats(beta, design, times, events, ties="efron"):
    """Log partial likelihood with analytic gradient and Hessian.

    Risk-set sums are suffix accumulations over the time-sorted data; within
    a tied event group the Efron correction subtracts l/d of the tied mass
    at the l-th factor (Breslow subtracts none).
    """
    if ties not in ("efron", "breslow"):
        raise DataError(f"unknown tie correction {ties!r}")
    order = np.argsort(times, kind="stable")
    X = design[order]
    t = times[order]
    e = events[order]
    n, p = X.shape

    eta = X @ beta
    eta_max = eta.max() if n else 0.0
    w = np.exp(eta - eta_max)  # common factor cancels in every ratio
    wx = w[:, None] * X
    wxx = wx[:, :, None] * X[:, None, :]
    S0 = np.cumsum(w[::-1])[::-1]
    S1 = np.cumsum(wx[::-1], axis=0)[::-1]
    S2 = np.cumsum(wxx[::-1], axis=0)[::-1]

    ll = 0.0
    grad = np.zeros(p)
    hess = np.zeros((p, p))
    starts, stops = _tie_groups(t)
    for start, stop in zip(starts, stops):
        ev = np.arange(start, stop)[e[start:stop]]
        d = ev.size
        if d == 0:
            continue
        ll += float(eta[ev].sum())
        grad += X[ev].sum(axis=0)
        sD = w[ev].sum()
        s1D = wx[ev].sum(axis=0)
        s2D = wxx[ev].sum(axis=0)
        fractions = np.arange(d) / d if ties == "efron" else np.zeros(d)
        for f in fractions:
            s0l = S0[start] - f * sD
            s1l = S1[start] - f * s1D
            s2l = S2[start] - f * s2D
            ll -= np.log(s0l) + eta_max
            ratio1 = s1l / s0l
            grad -= ratio1
            hess -= s2l / s0l - np.outer(ratio1, ratio1)
    return ll, grad, hess


def cox_fit(
    design: np.ndarray,
    cohort: Cohort,
    ties: str = "efron",
    max_iter: int = _MAX_ITER,
    tol: float = _REL_TOL,
    term_labels: tuple[str, ...] | None = None,
) -> CoxFit:
    """Newton-Raphson maximization of the log partial likelihood.

    Convergence is declared when the relative likelihood change drops below
    `tol`. Coefficients walking past +/-50 trip a separation error naming
    the offending column; a singular Hessian reports rank deficiency.
    """
    design = np.asarray(design, dtype=float)
    if design.ndim != 2 or design.shape[0] != len(cohort):
        raise DataError("design must be an n x p matrix aligned with the cohort")
    times = cohort.times()
    events = cohort.events()
    if not events.any():
        raise DataError("cox_fit requires at least one diagnosed subject")
    n, p = design.shape
    labels = tuple(term_labels) if term_labels else tuple(f"x{j}" for j in range(p))
    if len(labels) != p:
        raise DataError("term_labels length must match design columns")

    beta = np.zeros(p)
    ll, grad, hess = partial_loglik_stats(beta, design, times, events, ties)
    n_iter = 0
    converged = False
    for n_iter in range(1, max_iter + 1):
        try:
            delta = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            raise DataError(
                "design is rank deficient on the event risk sets (singular Hessian)"
            ) from None
        step = 1.0
        for _ in range(_MAX_HALVINGS + 1):
            candidate = beta + step * delta
            cand_ll, cand_grad, cand_hess = partial_loglik_stats(
                candidate, design, times, events, ties
            )
            if np.isfinite(cand_ll) and cand_ll >= ll - 1e-12:
                break
            step /= 2.0
        else:
            raise NumericalError("cox_fit: step halving failed to improve the likelihood")
        worst = int(np.argmax(np.abs(candidate)))
        if np.abs(candidate[worst]) > _SEPARATION_BOUND:
            raise NumericalError(
                f"cox_fit: coefficient for column {labels[worst]!r} diverged "
                f"(|beta| > {_SEPARATION_BOUND:g}); data are likely separable"
            )
        rel_change = abs(cand_ll - ll) / (abs(ll) + 1e-12)
        beta, ll, grad, hess = candidate, cand_ll, cand_grad, cand_hess
        if rel_change < tol:
            converged = True
            break
    if not converged:
        raise NumericalError(f"cox_fit did not converge in {max_iter} iterations")

    baseline_times, baseline_cumhaz = _breslow_baseline(beta, design, times, events)
    return CoxFit(
        term_labels=labels,
        beta=beta,
        baseline_times=baseline_times,
        baseline_cumhaz=baseline_cumhaz,
        loglik=float(ll),
        n_iter=n_iter,
        converged=converged,
    )


def _breslow_baseline(beta, design, times, events):
    order = np.argsort(times, kind="stable")
    X = design[order]
    t = times[order]
    e = events[order]
    eta = X @ beta
    eta_max = eta.max() if eta.size else 0.0
    w = np.exp(eta - eta_max)
    S0 = np.cumsum(w[::-1])[::-1]
    starts, stops = _tie_groups(t)
    jump_times = []
    increments = []
    for start, stop in zip(starts, stops):
        d = int(e[start:stop].sum())
        if d == 0:
            continue
        jump_times.append(t[start])
        increments.append(d / (S0[start] * np.exp(eta_max)))
    return np.array(jump_times), np.cumsum(increments) if increments else np.empty(0)


def cox_score(fit: CoxFit, design: np.ndarray, cohort: Cohort | None = None):
    """Linear predictor design @ beta per row, order preserved.

    Subject ids are taken from `cohort` when provided, else row indices.
    """
    design = np.asarray(design, dtype=float)
    if design.ndim != 2 or design.shape[1] != fit.beta.size:
        raise DataError(
            f"design has {design.shape[1] if design.ndim == 2 else '?'} columns, "
            f"fit expects {fit.beta.size}"
        )
    if cohort is not None and len(cohort) != design.shape[0]:
        raise DataError("cohort and design row counts differ")
    values = design @ fit.beta
    ids = [s.id for s in cohort] if cohort is not None else [str(i) for i in range(len(values))]
    return [RiskScore(sid, float(v)) for sid, v in zip(ids, values)]
