"""Censoring-aware survival toolkit for time-to-HD-diagnosis risk models.

Fits and evaluates four published risk models (a parametric logistic
age-at-onset model, a log-logistic AFT on the CAG-age product, and two Cox
models on motor/cognitive covariates) on right-censored cohorts, using
censoring-adjusted discrimination metrics (IPCW concordance, Kaplan-Meier
adjusted ROC/AUC), stratified cross-validation, and enrichment planning for
preventative clinical trials.
"""

__version__ = "0.1.0"

from .cap_aft import AftFit, CapScore, aft_fit, cap_score, cap_transform, loglogistic_survival
from .cohort import (
    Cohort,
    CohortSummary,
    IngestReport,
    Subject,
    cohort_csv_text,
    filter_analytic,
    ingest_csv,
    summarize,
    write_cohort_csv,
)
from .config import ModelConfig, RunConfig, load_config, save_config
from .cox import (
    CoxFit,
    DesignSpec,
    RiskScore,
    Term,
    build_design,
    cox_fit,
    cox_score,
    mrs_design,
    pin_design,
)
from .crossval import CvReport, FoldAssignment, make_folds, run_cv
from .enrichment import (
    ArmSize,
    EnrichmentPlan,
    build_plan,
    diagnosis_rate,
    optimal_threshold,
    per_arm_n,
)
from .errors import (
    ConfigError,
    DataError,
    HdRiskcastError,
    MissingCovariateError,
    NumericalError,
)
from .kaplan_meier import (
    CensoringKm,
    KmCurve,
    censoring_km_fit,
    km_eval,
    km_fit,
    km_fit_conditional,
)
from .langbehn import (
    LangbehnParams,
    LangbehnScore,
    langbehn_cdf,
    langbehn_conditional,
    langbehn_fit,
    langbehn_score,
)
from .metrics import (
    RocCurve,
    RocPoint,
    UnoCResult,
    global_uno_c,
    km_roc,
    roc_auc,
    uno_c,
    uno_c_profile,
)
from .models import CapModel, LangbehnModel, MrsModel, PinModel, model_by_name
from .simulate import AftTruth, CoxMrsTruth, SimSpec, calibrate_censoring, simulate

__all__ = [name for name in dir() if not name.startswith("_")]
