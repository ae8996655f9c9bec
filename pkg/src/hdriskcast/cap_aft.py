"""Log-logistic accelerated failure time model on {Age*CAG, Age}.

The model is log(T) = b0 + b1*Age*(CAG + b2) + sigma*eps with standard
logistic eps. It is fit in the equivalent linear parametrization
lp = b0 + c1*(Age*CAG) + c2*Age (b1 = c1, b2 = c2/c1), which makes the
censored likelihood smooth in all parameters. The reported risk score is
the negated linear predictor, so that larger values mean higher risk.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .cohort import Cohort
from .errors import DataError, NumericalError

_GTOL = 1e-9
_MAX_ITER = 200
# Newton polish applied after BFGS, which stalls on line-search precision
# well above the gradient tolerance.
_POLISH_ITER = 25


@dataclass(frozen=True)
class AftFit:
    """Fitted AFT parameters.

    b2 is the derived offset c2/c1 and is None (with a warning at fit time)
    when the Age*CAG coefficient is zero.
    """

    b0: float
    b1: float
    b2: float | None
    sigma: float
    loglik: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DataError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class CapScore:
    subject_id: str
    score: float


def cap_transform(age, cag):
    """CAG-age product: age * (cag - 34)."""
    return np.asarray(age, dtype=float) * (np.asarray(cag, dtype=float) - 34.0)


def loglogistic_survival(t, lp, sigma):
    """S(t) = 1 / (1 + (t/exp(lp))^(1/sigma)); the median sits at exp(lp)."""
    z = (np.log(t) - lp) / sigma
    return expit(-z)


def _neg_loglik_terms(theta, u, a, y, events):
    b0, c1, c2, s = theta
    sigma = np.exp(s)
    lp = b0 + c1 * u + c2 * a
    z = (y - lp) / sigma
    F = expit(z)
    # events: log density of log-time minus log W (Jacobian of t -> log t);
    # censored: log survival. The Jacobian term is parameter-free but kept
    # so loglik is the true data log likelihood.
    ll = np.where(
        events,
        -z - s - 2.0 * np.logaddexp(0.0, -z) - y,
        -np.logaddexp(0.0, z),
    )
    dldz = np.where(events, 1.0 - 2.0 * F, -F)
    return ll, dldz, z, F, sigma


def _neg_loglik_grad(theta, u, a, y, events):
    ll, dldz, z, _, sigma = _neg_loglik_terms(theta, u, a, y, events)
    gb0 = (dldz * (-1.0 / sigma)).sum()
    gc1 = (dldz * (-u / sigma)).sum()
    gc2 = (dldz * (-a / sigma)).sum()
    gs = (dldz * (-z)).sum() - events.sum()
    return -ll.sum(), -np.array([gb0, gc1, gc2, gs])


def _hessian(theta, u, a, y, events):
    _, dldz, z, F, sigma = _neg_loglik_terms(theta, u, a, y, events)
    h = np.where(events, -2.0, -1.0) * F * (1.0 - F)  # d2 ll / dz2
    X = np.column_stack([np.ones_like(u), u, a])
    zx = -X / sigma  # dz/dtheta for (b0, c1, c2)
    H = np.zeros((4, 4))
    H[:3, :3] = (h[:, None] * zx).T @ zx
    cross = (h * (-z))[:, None] * zx + dldz[:, None] * (X / sigma)
    H[:3, 3] = cross.sum(axis=0)
    H[3, :3] = H[:3, 3]
    H[3, 3] = (h * z * z + dldz * z).sum()
    return -H  # Hessian of the negative log likelihood


def aft_fit(cohort: Cohort) -> AftFit:
    """Censored MLE of the log-logistic AFT model.

    Optimization runs on standardized covariates (coefficients are exactly
    back-transformed afterwards) with BFGS, then Newton steps until the
    gradient inf-norm falls below 1e-9. Initialized from an uncensored
    least-squares fit on log W.
    """
    if not len(cohort):
        raise DataError("aft_fit requires a non-empty cohort")
    events = cohort.events()
    if not events.any():
        raise DataError("aft_fit requires at least one diagnosed subject")

    age = np.array([s.covariate("age_enroll") for s in cohort])
    cag = np.array([float(s.cag) for s in cohort])
    y = np.log(cohort.times())
    u_raw = age * cag

    centered = np.column_stack([u_raw - u_raw.mean(), age - age.mean()])
    if np.linalg.matrix_rank(centered) < 2:
        raise DataError("design {Age*CAG, Age} is collinear")

    mu, su = u_raw.mean(), u_raw.std()
    ma, sa = age.mean(), age.std()
    u = (u_raw - mu) / su
    a = (age - ma) / sa

    n_ev = int(events.sum())
    if n_ev >= 3:
        design = np.column_stack([np.ones(n_ev), u[events], a[events]])
        coef, *_ = np.linalg.lstsq(design, y[events], rcond=None)
        resid_sd = float((y[events] - design @ coef).std())
    else:
        coef = np.array([y[events].mean(), 0.0, 0.0])
        resid_sd = max(float(y.std()), 0.5)
    s0 = np.log(max(resid_sd * np.sqrt(3.0) / np.pi, 1e-3))
    x0 = np.array([coef[0], coef[1], coef[2], s0])

    args = (u, a, y, events)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(
            _neg_loglik_grad,
            x0,
            args=args,
            jac=True,
            method="BFGS",
            options={"gtol": _GTOL, "maxiter": _MAX_ITER},
        )
    theta = res.x
    nll, grad = _neg_loglik_grad(theta, *args)
    for _ in range(_POLISH_ITER):
        if np.abs(grad).max() <= _GTOL:
            break
        H = _hessian(theta, *args)
        try:
            delta = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            break
        step = 1.0
        for _ in range(30):
            cand = theta + step * delta
            cand_nll, cand_grad = _neg_loglik_grad(cand, *args)
            if np.isfinite(cand_nll) and cand_nll <= nll + 1e-12:
                break
            step /= 2.0
        else:
            break
        theta, nll, grad = cand, cand_nll, cand_grad
    if not np.all(np.isfinite(theta)) or not np.isfinite(nll):
        raise NumericalError("aft_fit failed to converge")
    if np.abs(grad).max() > 1e-4:
        raise NumericalError(
            f"aft_fit did not reach a stationary point (|grad|={np.abs(grad).max():.2e})"
        )

    b0s, c1s, c2s, ss = theta
    c1 = c1s / su
    c2 = c2s / sa
    b0 = b0s - c1s * mu / su - c2s * ma / sa
    sigma = float(np.exp(ss))
    if c1 == 0.0:
        warnings.warn("Age*CAG coefficient is zero; b2 = c2/c1 is undefined", stacklevel=2)
        b2 = None
    else:
        b2 = float(c2 / c1)
    return AftFit(b0=float(b0), b1=float(c1), b2=b2, sigma=sigma, loglik=float(-nll))


def linear_predictor(fit: AftFit, age, cag) -> np.ndarray:
    """b0 + b1*Age*(CAG + b2) on the log-time scale."""
    age = np.asarray(age, dtype=float)
    cag = np.asarray(cag, dtype=float)
    if fit.b2 is None:
        raise NumericalError("fit has undefined b2 (b1 = 0); cannot evaluate predictor")
    return fit.b0 + fit.b1 * age * (cag + fit.b2)


def cap_score(fit: AftFit, cohort: Cohort):
    """Negated linear predictor per subject (larger = higher risk)."""
    scores = []
    for s in cohort:
        age = s.covariate("age_enroll")
        lp = float(linear_predictor(fit, age, float(s.cag)))
        scores.append(CapScore(s.id, -lp))
    return scores
