"""Uniform fit/score interface over the four risk models.

Every model exposes `fit(cohort)` and `score_values(fitted, cohort,
horizon)` returning one risk value per subject, higher = riskier. The Cox
and AFT models ignore the horizon (their scores are horizon-free log-risk
scores); the logistic age-at-onset model is scored as the conditional
probability of diagnosis within the horizon, so it is flagged
`horizon_dependent` and consumers re-score it per evaluation time.

A model constructed with explicit parameters is in published-parameter
mode: `fit` returns those parameters untouched, which lets externally
estimated coefficients be evaluated on a new cohort without refitting.
"""

from __future__ import annotations

import numpy as np

from . import cap_aft, cox, langbehn
from .cohort import Cohort
from .errors import ConfigError

MODEL_NAMES = ("langbehn", "cap", "mrs", "pin")


class LangbehnModel:
    name = "langbehn"
    horizon_dependent = True

    def __init__(self, params: langbehn.LangbehnParams | None = None, b2_grid=None,
                 score_horizon: float = 5.0):
        self.params = params
        self.b2_grid = b2_grid
        self.score_horizon = score_horizon

    def fit(self, cohort: Cohort) -> langbehn.LangbehnParams:
        if self.params is not None:
            return self.params
        return langbehn.langbehn_fit(cohort, b2_grid=self.b2_grid)

    def score_values(self, fitted, cohort: Cohort, horizon: float | None = None) -> np.ndarray:
        h = self.score_horizon if horizon is None else horizon
        scores = langbehn.langbehn_score(fitted, cohort, h)
        return np.array([s.conditional_probability for s in scores])


class CapModel:
    name = "cap"
    horizon_dependent = False

    def __init__(self, params: cap_aft.AftFit | None = None):
        self.params = params

    def fit(self, cohort: Cohort) -> cap_aft.AftFit:
        if self.params is not None:
            return self.params
        return cap_aft.aft_fit(cohort)

    def score_values(self, fitted, cohort: Cohort, horizon=None) -> np.ndarray:
        return np.array([s.score for s in cap_aft.cap_score(fitted, cohort)])


class _CoxDesignModel:
    horizon_dependent = False
    design_spec: cox.DesignSpec

    def __init__(self, beta=None):
        if beta is not None:
            beta = np.asarray(beta, dtype=float)
            if beta.size != len(self.design_spec.terms):
                raise ConfigError(
                    f"{self.name}: expected {len(self.design_spec.terms)} coefficients, "
                    f"got {beta.size}"
                )
        self.beta = beta

    def fit(self, cohort: Cohort) -> cox.CoxFit:
        if self.beta is not None:
            return cox.CoxFit(
                term_labels=self.design_spec.labels,
                beta=self.beta,
                baseline_times=np.empty(0),
                baseline_cumhaz=np.empty(0),
                loglik=float("nan"),
                n_iter=0,
                converged=True,
            )
        design = cox.build_design(self.design_spec, cohort)
        return cox.cox_fit(design, cohort, term_labels=self.design_spec.labels)

    def score_values(self, fitted: cox.CoxFit, cohort: Cohort, horizon=None) -> np.ndarray:
        design = cox.build_design(self.design_spec, cohort)
        return design @ fitted.beta


class MrsModel(_CoxDesignModel):
    name = "mrs"

    def __init__(self, beta=None):
        self.design_spec = cox.mrs_design()
        super().__init__(beta)


class PinModel(_CoxDesignModel):
    name = "pin"

    def __init__(self, beta=None):
        self.design_spec = cox.pin_design()
        super().__init__(beta)


def model_by_name(name: str, **kwargs):
    table = {"langbehn": LangbehnModel, "cap": CapModel, "mrs": MrsModel, "pin": PinModel}
    if name not in table:
        raise ConfigError(f"unknown model {name!r}; expected one of {MODEL_NAMES}")
    return table[name](**kwargs)


def model_from_config(mc) -> object:
    """Build a model from a validated ModelConfig block."""
    params = mc.params_dict()
    if mc.name == "langbehn":
        fitted = langbehn.LangbehnParams(**params) if mc.mode == "published" else None
        return LangbehnModel(params=fitted, b2_grid=mc.b2_grid, score_horizon=mc.horizon)
    if mc.name == "cap":
        if mc.mode == "published":
            fitted = cap_aft.AftFit(
                b0=params["b0"],
                b1=params["b1"],
                b2=params["b2"],
                sigma=params["sigma"],
                loglik=float("nan"),
            )
            return CapModel(params=fitted)
        return CapModel()
    cls = MrsModel if mc.name == "mrs" else PinModel
    if mc.mode == "published":
        spec = cox.mrs_design() if mc.name == "mrs" else cox.pin_design()
        beta = [params[label] for label in spec.labels]
        return cls(beta=beta)
    return cls()


def models_from_config(cfg) -> list:
    """All models configured in a RunConfig, in config order."""
    return [model_from_config(mc) for mc in cfg.models]
