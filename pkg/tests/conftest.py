"""Shared cohort builders and the acceptance-suite summary hook."""

import numpy as np
import pytest

from hdriskcast.cohort import Cohort, Subject


def mk_subject(i, time, event, age=40.0, cag=42, dcl=0, **kw):
    return Subject(
        id=f"s{i:05d}",
        age_enroll=age,
        cag=cag,
        dcl=dcl,
        time=float(time),
        event=bool(event),
        **kw,
    )


def mk_cohort(pairs, **kw):
    """Cohort from (time, event) pairs; covariates default to constants."""
    return Cohort(tuple(mk_subject(i, t, e, **kw) for i, (t, e) in enumerate(pairs)))


def random_cohort(rng, n, tie_times=True, tie_scores=True, event_p=0.6):
    """Small random cohort plus scores, with optional heavy ties."""
    if tie_times:
        times = rng.integers(1, 5, n).astype(float)
    else:
        times = rng.uniform(0.5, 8.0, n)
    events = rng.uniform(size=n) < event_p
    if tie_scores:
        scores = rng.integers(0, 4, n).astype(float)
    else:
        scores = rng.normal(size=n)
    cohort = Cohort(
        tuple(mk_subject(i, t, e) for i, (t, e) in enumerate(zip(times, events)))
    )
    return cohort, scores


# ---------------------------------------------------------------------------
# Acceptance summary: one pass/fail line per criterion after the run.
# ---------------------------------------------------------------------------

_acceptance_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    if "test_acceptance" in item.nodeid:
        label = getattr(item.function, "_criterion", item.name)
        _acceptance_results[label] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for label, outcome in _acceptance_results.items():
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {label}")
