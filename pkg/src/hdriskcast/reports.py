"""File emission helpers: pinned float formatting and atomic writes.

Floats are rendered with `repr`, Python's shortest round-trip formatting
(at most 17 significant digits), so identical inputs produce byte-identical
output files. Files are written to a temp path in the target directory and
renamed into place, so a concurrent reader never sees a partial file.
"""

from __future__ import annotations

import json
import os
import tempfile


def fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return "NA"
    return str(value)


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(cell) for cell in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=False) + "\n")


def write_text(path, text: str) -> None:
    _atomic_write(path, text)


def km_curve_rows(curve):
    """(time, survival) rows for a two-column curve CSV."""
    return [(float(t), float(s)) for t, s in zip(curve.times, curve.survival)]


def roc_curve_rows(curve):
    return [(p.threshold, p.fpr, p.tpr) for p in curve.points]


def uno_profile_rows(profile):
    return [(r.tau, r.value, r.n_comparable_pairs, r.weight_mass) for r in profile]


def enrichment_rows(plans):
    """Table-shaped rows: time, model, threshold, rate, then per-effect n."""
    rows = []
    for plan in plans:
        row = [plan.t, plan.model, plan.q_star, plan.diagnosis_rate]
        row.extend(arm.n_per_arm for arm in plan.arms)
        rows.append(tuple(row))
    return rows


def enrichment_header(effects) -> tuple:
    return ("time", "model", "threshold", "rate") + tuple(
        f"n{int(round(e * 100))}" for e in effects
    )
