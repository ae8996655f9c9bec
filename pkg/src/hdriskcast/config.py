"""Run configuration: JSON file with strict schema validation.

The file is a nested JSON object; unknown keys anywhere are errors so that
misspellings never silently fall back to defaults. Every model block is
either ``{"mode": "fit"}`` or ``{"mode": "published", "params": {...}}``
with the full named coefficient set, which is how externally published
parameter estimates enter an analysis without refitting.

Defaults are total: a config naming only the input file and one model runs
end to end.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from .cox import MRS_TERM_NAMES, PIN_TERM_NAMES
from .errors import ConfigError
from .simulate import AftTruth, CoxMrsTruth, SimSpec

LANGBEHN_PARAM_KEYS = ("b0", "b1", "b2", "g0", "g1", "g2")
CAP_PARAM_KEYS = ("b0", "b1", "b2", "sigma")
MODEL_PARAM_KEYS = {
    "langbehn": LANGBEHN_PARAM_KEYS,
    "cap": CAP_PARAM_KEYS,
    "mrs": MRS_TERM_NAMES,
    "pin": PIN_TERM_NAMES,
}

DEFAULT_FILTER = {"cag_min": 40, "cag_max": 57, "require_undiagnosed": True}
DEFAULT_CV = {"k": 5, "seed": 2024}
DEFAULT_ENRICHMENT = {
    "durations": (2.0, 3.0, 4.0, 5.0),
    "effects": (0.30, 0.40, 0.50),
    "power": 0.80,
    "alpha": 0.05,
}
DEFAULT_ROC_TIMES = (3.0, 5.0)
DEFAULT_LANGBEHN_HORIZON = 5.0


@dataclass(frozen=True)
class ModelConfig:
    name: str
    mode: str  # "fit" | "published"
    params: tuple | None = None  # ((key, value), ...) in canonical key order
    b2_grid: tuple | None = None  # langbehn only
    horizon: float = DEFAULT_LANGBEHN_HORIZON  # langbehn only

    def params_dict(self) -> dict:
        return dict(self.params) if self.params is not None else {}


@dataclass(frozen=True)
class RunConfig:
    input_path: str
    columns: tuple | None
    cag_min: int
    cag_max: int
    require_undiagnosed: bool
    models: tuple  # of ModelConfig
    tau_grid: tuple | None
    roc_times: tuple
    cv_k: int
    cv_seed: int
    durations: tuple
    effects: tuple
    power: float
    alpha: float
    simulate: SimSpec | None
    output_dir: str

    def columns_dict(self) -> dict:
        return dict(self.columns) if self.columns is not None else {}

    def model(self, name: str) -> ModelConfig:
        for m in self.models:
            if m.name == name:
                return m
        raise ConfigError(f"model {name!r} is not configured")


def _require_keys(obj: dict, allowed, path: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")


def _number(obj, path, lo=None, hi=None):
    if not isinstance(obj, (int, float)) or isinstance(obj, bool):
        raise ConfigError(f"{path}: expected a number, got {obj!r}")
    value = float(obj)
    if lo is not None and value < lo:
        raise ConfigError(f"{path}: must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(f"{path}: must be <= {hi}, got {value}")
    return value


def _integer(obj, path, lo=None):
    if not isinstance(obj, int) or isinstance(obj, bool):
        raise ConfigError(f"{path}: expected an integer, got {obj!r}")
    if lo is not None and obj < lo:
        raise ConfigError(f"{path}: must be >= {lo}, got {obj}")
    return obj


def _number_list(obj, path, allow_empty=False):
    if not isinstance(obj, list):
        raise ConfigError(f"{path}: expected a list of numbers")
    if not obj and not allow_empty:
        raise ConfigError(f"{path}: must be non-empty")
    return tuple(_number(x, f"{path}[{i}]") for i, x in enumerate(obj))


def _parse_model(name: str, block, path: str) -> ModelConfig:
    if name not in MODEL_PARAM_KEYS:
        raise ConfigError(f"{path}: unknown model {name!r}")
    allowed = {"mode", "params"}
    if name == "langbehn":
        allowed |= {"b2_grid", "horizon"}
    _require_keys(block, allowed, path)
    mode = block.get("mode", "fit")
    if mode not in ("fit", "published"):
        raise ConfigError(f"{path}.mode: expected 'fit' or 'published', got {mode!r}")
    params = None
    if mode == "published":
        raw = block.get("params")
        if raw is None:
            raise ConfigError(f"{path}: published mode requires a params block")
        keys = MODEL_PARAM_KEYS[name]
        _require_keys(raw, keys, f"{path}.params")
        missing = [k for k in keys if k not in raw]
        if missing:
            raise ConfigError(f"{path}.params: missing term(s) {missing}")
        params = tuple((k, _number(raw[k], f"{path}.params.{k}")) for k in keys)
    elif "params" in block:
        raise ConfigError(f"{path}: params are only allowed with mode 'published'")
    b2_grid = None
    horizon = DEFAULT_LANGBEHN_HORIZON
    if name == "langbehn":
        if "b2_grid" in block:
            b2_grid = _number_list(block["b2_grid"], f"{path}.b2_grid")
        if "horizon" in block:
            horizon = _number(block["horizon"], f"{path}.horizon", lo=1e-9)
    return ModelConfig(name=name, mode=mode, params=params, b2_grid=b2_grid, horizon=horizon)


_SIM_KEYS = (
    "n",
    "seed",
    "truth",
    "cag_mean",
    "cag_sd",
    "cag_min",
    "cag_max",
    "age_mean",
    "age_sd",
    "age_min",
    "age_max",
    "dcl_probs",
    "sex_female_p",
    "admin_horizon",
    "dropout_hazard",
    "target_censoring_rate",
)


def _parse_truth(block, path: str):
    _require_keys(
        block,
        {"kind", "b0", "b1", "b2", "sigma", "beta", "baseline_shape", "baseline_scale"},
        path,
    )
    kind = block.get("kind")
    if kind == "aft":
        extra = set(block) - {"kind", "b0", "b1", "b2", "sigma"}
        if extra:
            raise ConfigError(f"{path}: key(s) {sorted(extra)} not valid for kind 'aft'")
        defaults = AftTruth()
        return AftTruth(
            b0=_number(block.get("b0", defaults.b0), f"{path}.b0"),
            b1=_number(block.get("b1", defaults.b1), f"{path}.b1"),
            b2=_number(block.get("b2", defaults.b2), f"{path}.b2"),
            sigma=_number(block.get("sigma", defaults.sigma), f"{path}.sigma", lo=1e-12),
        )
    if kind == "cox_mrs":
        extra = set(block) - {"kind", "beta", "baseline_shape", "baseline_scale"}
        if extra:
            raise ConfigError(f"{path}: key(s) {sorted(extra)} not valid for kind 'cox_mrs'")
        defaults = CoxMrsTruth()
        beta = defaults.beta
        if "beta" in block:
            raw = block["beta"]
            _require_keys(raw, MRS_TERM_NAMES, f"{path}.beta")
            missing = [k for k in MRS_TERM_NAMES if k not in raw]
            if missing:
                raise ConfigError(f"{path}.beta: missing term(s) {missing}")
            beta = tuple(_number(raw[k], f"{path}.beta.{k}") for k in MRS_TERM_NAMES)
        return CoxMrsTruth(
            beta=beta,
            baseline_shape=_number(
                block.get("baseline_shape", defaults.baseline_shape),
                f"{path}.baseline_shape",
                lo=1e-12,
            ),
            baseline_scale=_number(
                block.get("baseline_scale", defaults.baseline_scale),
                f"{path}.baseline_scale",
                lo=1e-12,
            ),
        )
    raise ConfigError(f"{path}.kind: expected 'aft' or 'cox_mrs', got {kind!r}")


def _parse_simulate(block, path: str) -> SimSpec:
    _require_keys(block, _SIM_KEYS, path)
    if "n" not in block or "seed" not in block:
        raise ConfigError(f"{path}: 'n' and 'seed' are required")
    kwargs = {
        "n": _integer(block["n"], f"{path}.n", lo=1),
        "seed": _integer(block["seed"], f"{path}.seed", lo=0),
    }
    if "truth" in block:
        kwargs["truth"] = _parse_truth(block["truth"], f"{path}.truth")
    for key, lo in (
        ("cag_mean", None),
        ("cag_sd", 1e-12),
        ("age_mean", None),
        ("age_sd", 1e-12),
        ("age_min", None),
        ("age_max", None),
        ("sex_female_p", 0.0),
        ("admin_horizon", 1e-12),
        ("dropout_hazard", 0.0),
        ("target_censoring_rate", 0.0),
    ):
        if key in block and block[key] is not None:
            kwargs[key] = _number(block[key], f"{path}.{key}", lo=lo)
    for key in ("cag_min", "cag_max"):
        if key in block:
            kwargs[key] = _integer(block[key], f"{path}.{key}", lo=0)
    if "dcl_probs" in block:
        probs = _number_list(block["dcl_probs"], f"{path}.dcl_probs")
        if len(probs) != 4:
            raise ConfigError(f"{path}.dcl_probs: expected 4 probabilities")
        kwargs["dcl_probs"] = probs
    return SimSpec(**kwargs)


_TOP_KEYS = (
    "input",
    "filter",
    "models",
    "tau_grid",
    "roc_times",
    "cv",
    "enrichment",
    "simulate",
    "output_dir",
)


def parse_config(raw: dict) -> RunConfig:
    """Validate a parsed JSON object into a RunConfig."""
    _require_keys(raw, _TOP_KEYS, "config")
    if "input" not in raw:
        raise ConfigError("config: missing required 'input' block")
    _require_keys(raw["input"], {"path", "columns"}, "config.input")
    if "path" not in raw["input"]:
        raise ConfigError("config.input: missing 'path'")
    input_path = raw["input"]["path"]
    if not isinstance(input_path, str) or not input_path:
        raise ConfigError("config.input.path: expected a non-empty string")
    columns = None
    if "columns" in raw["input"]:
        cols = raw["input"]["columns"]
        if not isinstance(cols, dict):
            raise ConfigError("config.input.columns: expected an object")
        for k, v in cols.items():
            if not isinstance(v, str):
                raise ConfigError(f"config.input.columns.{k}: expected a string")
        columns = tuple(sorted(cols.items()))

    filt = dict(DEFAULT_FILTER)
    if "filter" in raw:
        _require_keys(raw["filter"], DEFAULT_FILTER, "config.filter")
        for key in ("cag_min", "cag_max"):
            if key in raw["filter"]:
                filt[key] = _integer(raw["filter"][key], f"config.filter.{key}", lo=0)
        if "require_undiagnosed" in raw["filter"]:
            value = raw["filter"]["require_undiagnosed"]
            if not isinstance(value, bool):
                raise ConfigError("config.filter.require_undiagnosed: expected a boolean")
            filt["require_undiagnosed"] = value
    if filt["cag_min"] > filt["cag_max"]:
        raise ConfigError("config.filter: cag_min exceeds cag_max")

    if "models" not in raw or not raw["models"]:
        raise ConfigError("config: at least one model must be configured")
    if not isinstance(raw["models"], dict):
        raise ConfigError("config.models: expected an object keyed by model name")
    models = tuple(
        _parse_model(name, block, f"config.models.{name}")
        for name, block in raw["models"].items()
    )

    tau_grid = None
    if raw.get("tau_grid") is not None:
        tau_grid = _number_list(raw["tau_grid"], "config.tau_grid")
        if list(tau_grid) != sorted(tau_grid):
            raise ConfigError("config.tau_grid: must be sorted ascending")

    roc_times = DEFAULT_ROC_TIMES
    if "roc_times" in raw:
        roc_times = _number_list(raw["roc_times"], "config.roc_times")

    cv = dict(DEFAULT_CV)
    if "cv" in raw:
        _require_keys(raw["cv"], DEFAULT_CV, "config.cv")
        if "k" in raw["cv"]:
            cv["k"] = _integer(raw["cv"]["k"], "config.cv.k", lo=2)
        if "seed" in raw["cv"]:
            cv["seed"] = _integer(raw["cv"]["seed"], "config.cv.seed", lo=0)

    enrich = dict(DEFAULT_ENRICHMENT)
    if "enrichment" in raw:
        _require_keys(raw["enrichment"], DEFAULT_ENRICHMENT, "config.enrichment")
        if "durations" in raw["enrichment"]:
            enrich["durations"] = _number_list(raw["enrichment"]["durations"], "config.enrichment.durations")
        if "effects" in raw["enrichment"]:
            enrich["effects"] = _number_list(raw["enrichment"]["effects"], "config.enrichment.effects")
            for i, e in enumerate(enrich["effects"]):
                if not 0.0 < e < 1.0:
                    raise ConfigError(f"config.enrichment.effects[{i}]: must be in (0, 1)")
        if "power" in raw["enrichment"]:
            enrich["power"] = _number(raw["enrichment"]["power"], "config.enrichment.power", lo=1e-9, hi=1 - 1e-9)
        if "alpha" in raw["enrichment"]:
            enrich["alpha"] = _number(raw["enrichment"]["alpha"], "config.enrichment.alpha", lo=1e-9, hi=1 - 1e-9)

    sim = None
    if raw.get("simulate") is not None:
        sim = _parse_simulate(raw["simulate"], "config.simulate")

    output_dir = raw.get("output_dir", "out")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("config.output_dir: expected a non-empty string")

    return RunConfig(
        input_path=input_path,
        columns=columns,
        cag_min=filt["cag_min"],
        cag_max=filt["cag_max"],
        require_undiagnosed=filt["require_undiagnosed"],
        models=models,
        tau_grid=tau_grid,
        roc_times=roc_times,
        cv_k=cv["k"],
        cv_seed=cv["seed"],
        durations=enrich["durations"],
        effects=enrich["effects"],
        power=enrich["power"],
        alpha=enrich["alpha"],
        simulate=sim,
        output_dir=output_dir,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return parse_config(raw)


def config_to_dict(cfg: RunConfig) -> dict:
    """Inverse of parse_config (up to default filling)."""
    out: dict = {"input": {"path": cfg.input_path}}
    if cfg.columns is not None:
        out["input"]["columns"] = dict(cfg.columns)
    out["filter"] = {
        "cag_min": cfg.cag_min,
        "cag_max": cfg.cag_max,
        "require_undiagnosed": cfg.require_undiagnosed,
    }
    out["models"] = {}
    for m in cfg.models:
        block: dict = {"mode": m.mode}
        if m.params is not None:
            block["params"] = dict(m.params)
        if m.name == "langbehn":
            block["horizon"] = m.horizon
            if m.b2_grid is not None:
                block["b2_grid"] = list(m.b2_grid)
        out["models"][m.name] = block
    out["tau_grid"] = list(cfg.tau_grid) if cfg.tau_grid is not None else None
    out["roc_times"] = list(cfg.roc_times)
    out["cv"] = {"k": cfg.cv_k, "seed": cfg.cv_seed}
    out["enrichment"] = {
        "durations": list(cfg.durations),
        "effects": list(cfg.effects),
        "power": cfg.power,
        "alpha": cfg.alpha,
    }
    if cfg.simulate is not None:
        sim = cfg.simulate
        truth: dict = {}
        if isinstance(sim.truth, AftTruth):
            truth = {"kind": "aft", **asdict(sim.truth)}
        else:
            truth = {
                "kind": "cox_mrs",
                "beta": dict(zip(MRS_TERM_NAMES, sim.truth.beta)),
                "baseline_shape": sim.truth.baseline_shape,
                "baseline_scale": sim.truth.baseline_scale,
            }
        out["simulate"] = {
            "n": sim.n,
            "seed": sim.seed,
            "truth": truth,
            "cag_mean": sim.cag_mean,
            "cag_sd": sim.cag_sd,
            "cag_min": sim.cag_min,
            "cag_max": sim.cag_max,
            "age_mean": sim.age_mean,
            "age_sd": sim.age_sd,
            "age_min": sim.age_min,
            "age_max": sim.age_max,
            "dcl_probs": list(sim.dcl_probs),
            "sex_female_p": sim.sex_female_p,
            "admin_horizon": sim.admin_horizon,
            "dropout_hazard": sim.dropout_hazard,
            "target_censoring_rate": sim.target_censoring_rate,
        }
    else:
        out["simulate"] = None
    out["output_dir"] = cfg.output_dir
    return out


def save_config(cfg: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")
