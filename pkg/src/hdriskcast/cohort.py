"""Right-censored cohort data model, CSV ingestion, filtering, and summaries.

A cohort holds one observed record per patient: the follow-up time in years
from enrollment, the diagnosis indicator (True = clinically diagnosed during
follow-up), and baseline covariates. Optional covariates may be missing;
model-specific scoring rejects subjects that lack a covariate the model
needs rather than imputing it.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, MissingCovariateError

SEX_VALUES = ("male", "female")

# Canonical CSV column names; ingest_csv accepts a remapping on top of these.
CSV_FIELDS = (
    "id",
    "age_enroll",
    "cag",
    "dcl",
    "tms",
    "sdmt",
    "stroop_word",
    "stroop_color",
    "stroop_interference",
    "sex",
    "time",
    "event",
)

# Fields that every subject must carry; the rest may be missing.
REQUIRED_FIELDS = ("id", "age_enroll", "cag", "dcl", "time", "event")

_OPTIONAL_NUMERIC = ("tms", "sdmt", "stroop_word", "stroop_color", "stroop_interference")

MISSING_TOKENS = ("", "NA")


@dataclass(frozen=True)
class Subject:
    """One patient's observed record.

    `time` is years from enrollment to diagnosis or censoring, `event` is
    True when the patient was diagnosed during follow-up. Clinical scores
    (tms, sdmt, the three stroop tests) and sex are optional.
    """

    id: str
    age_enroll: float
    cag: int
    dcl: int
    time: float
    event: bool
    tms: float | None = None
    sdmt: float | None = None
    stroop_word: float | None = None
    stroop_color: float | None = None
    stroop_interference: float | None = None
    sex: str | None = None

    def __post_init__(self):
        if not self.id:
            raise DataError("subject id must be non-empty")
        if not (self.age_enroll > 0 and math.isfinite(self.age_enroll)):
            raise DataError(f"subject {self.id!r}: age_enroll must be positive")
        if self.cag < 0 or int(self.cag) != self.cag:
            raise DataError(f"subject {self.id!r}: cag must be a non-negative integer")
        if self.dcl not in (0, 1, 2, 3, 4):
            raise DataError(f"subject {self.id!r}: dcl must be in 0..4")
        if not (self.time > 0 and math.isfinite(self.time)):
            raise DataError(f"subject {self.id!r}: time must be positive")
        if self.sex is not None and self.sex not in SEX_VALUES:
            raise DataError(f"subject {self.id!r}: sex must be one of {SEX_VALUES}")
        for name in _OPTIONAL_NUMERIC:
            value = getattr(self, name)
            if value is not None and (value < 0 or not math.isfinite(value)):
                raise DataError(f"subject {self.id!r}: {name} must be non-negative")

    def covariate(self, name: str) -> float:
        """Return a numeric covariate, raising if it is missing."""
        value = getattr(self, name)
        if value is None:
            raise MissingCovariateError(self.id, name)
        return float(value)


@dataclass(frozen=True)
class Cohort:
    """An ordered, immutable collection of subjects."""

    subjects: tuple[Subject, ...]
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "subjects", tuple(self.subjects))
        seen = set()
        for s in self.subjects:
            if s.id in seen:
                raise DataError(f"duplicate subject id {s.id!r}")
            seen.add(s.id)

    def __len__(self):
        return len(self.subjects)

    def __iter__(self):
        return iter(self.subjects)

    @property
    def n_events(self) -> int:
        return sum(s.event for s in self.subjects)

    @property
    def censoring_rate(self) -> float:
        if not self.subjects:
            raise DataError("censoring rate undefined for an empty cohort")
        return 1.0 - self.n_events / len(self.subjects)

    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.subjects], dtype=float)

    def events(self) -> np.ndarray:
        return np.array([s.event for s in self.subjects], dtype=bool)


@dataclass(frozen=True)
class RejectedRow:
    row: int  # 1-based data-row number (header not counted)
    reason: str


@dataclass(frozen=True)
class IngestReport:
    n_rows: int
    n_accepted: int
    rejections: tuple[RejectedRow, ...] = ()


def _parse_float(text: str, column: str) -> float | None:
    if text.strip() in MISSING_TOKENS:
        return None
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"column {column!r}: cannot parse {text!r} as a number") from None


def _parse_int(text: str, column: str) -> int | None:
    value = _parse_float(text, column)
    if value is None:
        return None
    if value != int(value):
        raise ValueError(f"column {column!r}: {text!r} is not an integer")
    return int(value)


def _parse_event(text: str, column: str) -> bool | None:
    token = text.strip().lower()
    if token in ("", "na"):
        return None
    if token in ("1", "true"):
        return True
    if token in ("0", "false"):
        return False
    raise ValueError(f"column {column!r}: cannot parse {text!r} as an event flag")


def ingest_csv(path, columns: dict[str, str] | None = None):
    """Read a cohort from a CSV file.

    Parameters
    ----------
    path : str or os.PathLike
        CSV file with a header row. Commas separate fields, '.' is the
        decimal mark, and an empty string or "NA" marks a missing value.
    columns : dict, optional
        Mapping from canonical field names (see ``CSV_FIELDS``) to the
        column names used in the file. Unmapped fields use their canonical
        names. Columns for required fields must exist; optional fields whose
        (default-mapped) columns are absent are treated as all-missing.

    Returns
    -------
    (Cohort, IngestReport)
        Rows with unparseable or missing required fields are dropped and
        reported with their 1-based data-row number.
    """
    if not os.path.exists(path):
        raise DataError(f"input file not found: {path}")
    colmap = {name: name for name in CSV_FIELDS}
    if columns:
        unknown = set(columns) - set(CSV_FIELDS)
        if unknown:
            raise DataError(f"unknown field(s) in column map: {sorted(unknown)}")
        colmap.update(columns)

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file (no header row)")
        header = set(reader.fieldnames)
        for name in REQUIRED_FIELDS:
            if colmap[name] not in header:
                raise DataError(f"{path}: missing mapped column {colmap[name]!r}")
        explicit = set(columns or ())
        for name in CSV_FIELDS:
            if name in explicit and colmap[name] not in header:
                raise DataError(f"{path}: missing mapped column {colmap[name]!r}")
        present = {name: colmap[name] in header for name in CSV_FIELDS}

        subjects: list[Subject] = []
        rejections: list[RejectedRow] = []
        n_rows = 0
        seen_ids: set[str] = set()
        for row_number, row in enumerate(reader, start=1):
            n_rows += 1
            try:
                raw = {
                    name: (row[colmap[name]] if present[name] else "")
                    for name in CSV_FIELDS
                }
                sid = raw["id"].strip()
                if not sid:
                    raise ValueError(f"column {colmap['id']!r}: empty id")
                age = _parse_float(raw["age_enroll"], colmap["age_enroll"])
                cag = _parse_int(raw["cag"], colmap["cag"])
                dcl = _parse_int(raw["dcl"], colmap["dcl"])
                time = _parse_float(raw["time"], colmap["time"])
                event = _parse_event(raw["event"], colmap["event"])
                for name, value in (
                    ("age_enroll", age),
                    ("cag", cag),
                    ("dcl", dcl),
                    ("time", time),
                    ("event", event),
                ):
                    if value is None:
                        raise ValueError(f"column {colmap[name]!r}: required value is missing")
                sex_token = raw["sex"].strip().lower()
                subject = Subject(
                    id=sid,
                    age_enroll=age,
                    cag=cag,
                    dcl=dcl,
                    time=time,
                    event=event,
                    tms=_parse_float(raw["tms"], colmap["tms"]),
                    sdmt=_parse_float(raw["sdmt"], colmap["sdmt"]),
                    stroop_word=_parse_float(raw["stroop_word"], colmap["stroop_word"]),
                    stroop_color=_parse_float(raw["stroop_color"], colmap["stroop_color"]),
                    stroop_interference=_parse_float(
                        raw["stroop_interference"], colmap["stroop_interference"]
                    ),
                    sex=None if sex_token in ("", "na") else sex_token,
                )
                if subject.id in seen_ids:
                    raise ValueError(f"duplicate subject id {subject.id!r}")
            except (ValueError, DataError) as exc:
                rejections.append(RejectedRow(row_number, str(exc)))
                continue
            seen_ids.add(subject.id)
            subjects.append(subject)

    if not subjects:
        raise DataError(f"{path}: no valid data rows")
    cohort = Cohort(tuple(subjects), provenance=os.fspath(path))
    return cohort, IngestReport(n_rows, len(subjects), tuple(rejections))


def _csv_cell(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def cohort_csv_text(cohort: Cohort) -> str:
    """Render a cohort in the exact schema `ingest_csv` consumes.

    Floats use shortest round-trip formatting so that write-then-read
    reproduces the cohort bit-for-bit.
    """
    lines = [",".join(CSV_FIELDS)]
    for s in cohort:
        lines.append(",".join(_csv_cell(getattr(s, name)) for name in CSV_FIELDS))
    return "\n".join(lines) + "\n"


def write_cohort_csv(cohort: Cohort, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(cohort_csv_text(cohort))


def filter_analytic(
    cohort: Cohort,
    cag_min: int = 40,
    cag_max: int = 57,
    require_undiagnosed: bool = True,
) -> Cohort:
    """Apply the analytic-sample filter: CAG window and, optionally, DCL < 4.

    Order is preserved; the result may be empty.
    """
    if cag_min > cag_max:
        raise DataError(f"cag_min {cag_min} exceeds cag_max {cag_max}")
    kept = tuple(
        s
        for s in cohort
        if cag_min <= s.cag <= cag_max and (not require_undiagnosed or s.dcl < 4)
    )
    return Cohort(kept, provenance=cohort.provenance)


CONTINUOUS_SUMMARY_FIELDS = (
    "age_enroll",
    "cag",
    "tms",
    "sdmt",
    "stroop_word",
    "stroop_color",
    "stroop_interference",
    "time",
)

CATEGORICAL_SUMMARY_FIELDS = ("dcl", "sex")

_STRATA = ("censored", "diagnosed")


@dataclass(frozen=True)
class CohortSummary:
    """Baseline characteristics stratified by diagnosis status.

    `continuous` maps field -> stratum -> (n, mean, sd); sd is None when
    fewer than two values are available. `categorical` maps field ->
    stratum -> {level: (count, percent)}; percentages are of the non-missing
    values within the stratum.
    """

    n_total: int
    n_event: int
    n_censored: int
    continuous: dict = field(default_factory=dict)
    categorical: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "n_total": self.n_total,
            "n_event": self.n_event,
            "n_censored": self.n_censored,
            "continuous": {
                name: {
                    stratum: {"n": n, "mean": mean, "sd": sd}
                    for stratum, (n, mean, sd) in by_stratum.items()
                }
                for name, by_stratum in self.continuous.items()
            },
            "categorical": {
                name: {
                    stratum: {
                        str(level): {"count": count, "percent": pct}
                        for level, (count, pct) in levels.items()
                    }
                    for stratum, levels in by_stratum.items()
                }
                for name, by_stratum in self.categorical.items()
            },
        }

    def to_text(self) -> str:
        """Flat key-value report, one `key = value` line per statistic."""
        lines = [
            f"n_total = {self.n_total}",
            f"n_censored = {self.n_censored}",
            f"n_diagnosed = {self.n_event}",
        ]
        for name, by_stratum in self.continuous.items():
            for stratum, (n, mean, sd) in by_stratum.items():
                sd_text = "NA" if sd is None else f"{sd:.2f}"
                lines.append(f"{name}.{stratum} = {mean:.2f} ({sd_text}) [n={n}]")
        for name, by_stratum in self.categorical.items():
            for stratum, levels in by_stratum.items():
                for level, (count, pct) in levels.items():
                    lines.append(f"{name}.{stratum}.{level} = {count} ({pct:.1f}%)")
        return "\n".join(lines) + "\n"


def summarize(cohort: Cohort) -> CohortSummary:
    """Event-stratified means/SDs and categorical counts for a cohort.

    SDs use the n-1 denominator and are reported as absent for strata with
    fewer than two non-missing values.
    """
    if not len(cohort):
        raise DataError("cannot summarize an empty cohort")

    groups = {
        "censored": [s for s in cohort if not s.event],
        "diagnosed": [s for s in cohort if s.event],
    }
    continuous = {}
    for name in CONTINUOUS_SUMMARY_FIELDS:
        by_stratum = {}
        for stratum in _STRATA:
            values = np.array(
                [getattr(s, name) for s in groups[stratum] if getattr(s, name) is not None],
                dtype=float,
            )
            if values.size == 0:
                continue
            mean = float(values.mean())
            sd = float(values.std(ddof=1)) if values.size > 1 else None
            by_stratum[stratum] = (int(values.size), mean, sd)
        continuous[name] = by_stratum

    categorical = {}
    for name in CATEGORICAL_SUMMARY_FIELDS:
        by_stratum = {}
        for stratum in _STRATA:
            values = [getattr(s, name) for s in groups[stratum] if getattr(s, name) is not None]
            if not values:
                continue
            levels = {}
            total = len(values)
            for level in sorted(set(values), key=str):
                count = sum(v == level for v in values)
                levels[level] = (count, 100.0 * count / total)
            by_stratum[stratum] = levels
        categorical[name] = by_stratum

    return CohortSummary(
        n_total=len(cohort),
        n_event=cohort.n_events,
        n_censored=len(cohort) - cohort.n_events,
        continuous=continuous,
        categorical=categorical,
    )
