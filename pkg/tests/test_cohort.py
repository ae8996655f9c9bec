import numpy as np
import pytest

from hdriskcast.cohort import (
    Cohort,
    Subject,
    filter_analytic,
    ingest_csv,
    summarize,
    write_cohort_csv,
)
from hdriskcast.errors import DataError
from hdriskcast.simulate import SimSpec, simulate

from conftest import mk_cohort, mk_subject


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


HEADER = "id,age_enroll,cag,dcl,tms,sdmt,stroop_word,stroop_color,stroop_interference,sex,time,event"


class TestIngest:
    def test_three_valid_rows(self, tmp_path):
        f = tmp_path / "c.csv"
        write_lines(
            f,
            [
                HEADER,
                "a,40.5,42,0,5,45,80,65,38,male,2.5,1",
                "b,38.0,41,1,3,50,90,70,40,female,4.0,0",
                "c,55.0,44,2,NA,NA,NA,NA,NA,NA,1.25,1",
            ],
        )
        cohort, report = ingest_csv(f)
        assert len(cohort) == 3
        assert report.n_rows == 3
        assert report.rejections == ()
        assert cohort.subjects[2].tms is None
        assert cohort.subjects[0].sex == "male"

    def test_bad_time_row_rejected_with_row_number(self, tmp_path):
        f = tmp_path / "c.csv"
        write_lines(
            f,
            [
                HEADER,
                "a,40.5,42,0,5,45,80,65,38,male,2.5,1",
                "b,38.0,41,1,3,50,90,70,40,female,NA,0",
                "c,55.0,44,2,1,40,70,60,30,male,1.25,1",
            ],
        )
        cohort, report = ingest_csv(f)
        assert len(cohort) == 2
        assert len(report.rejections) == 1
        assert report.rejections[0].row == 2
        assert "time" in report.rejections[0].reason

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            ingest_csv(tmp_path / "nope.csv")

    def test_missing_mapped_column(self, tmp_path):
        f = tmp_path / "c.csv"
        write_lines(f, ["id,age_enroll,cag,dcl,time", "a,40,42,0,2"])
        with pytest.raises(DataError, match="event"):
            ingest_csv(f)

    def test_zero_valid_rows(self, tmp_path):
        f = tmp_path / "c.csv"
        write_lines(f, [HEADER, "a,40.5,42,0,5,45,80,65,38,male,-1,1"])
        with pytest.raises(DataError, match="no valid data rows"):
            ingest_csv(f)

    def test_column_remapping(self, tmp_path):
        f = tmp_path / "c.csv"
        write_lines(
            f,
            [
                "subj,age,repeats,dcl,followup,diagnosed",
                "a,40,42,0,2.5,1",
            ],
        )
        cohort, _ = ingest_csv(
            f,
            columns={
                "id": "subj",
                "age_enroll": "age",
                "cag": "repeats",
                "time": "followup",
                "event": "diagnosed",
            },
        )
        assert cohort.subjects[0].cag == 42

    def test_simulated_cohort_round_trips(self, tmp_path):
        cohort = simulate(SimSpec(n=1000, seed=31))
        f = tmp_path / "sim.csv"
        write_cohort_csv(cohort, f)
        back, report = ingest_csv(f)
        assert report.rejections == ()
        assert back.subjects == cohort.subjects


class TestSubjectValidation:
    def test_time_must_be_positive(self):
        with pytest.raises(DataError):
            mk_subject(0, 0.0, True)

    def test_dcl_range(self):
        with pytest.raises(DataError):
            mk_subject(0, 1.0, True, dcl=5)

    def test_duplicate_ids_rejected(self):
        a = mk_subject(0, 1.0, True)
        with pytest.raises(DataError, match="duplicate"):
            Cohort((a, a))

    def test_censoring_rate(self):
        cohort = mk_cohort([(1, True), (2, False), (3, False), (4, False)])
        assert cohort.censoring_rate == 0.75


class TestFilterAnalytic:
    def test_cag_window_and_dcl(self):
        subjects = (
            mk_subject(0, 1.0, True, cag=39),
            mk_subject(1, 1.0, True, cag=40, dcl=3),
            mk_subject(2, 1.0, True, cag=57, dcl=4),
            mk_subject(3, 1.0, True, cag=58),
        )
        cohort = Cohort(subjects)
        kept = filter_analytic(cohort)
        assert [s.id for s in kept] == ["s00001"]
        kept_all = filter_analytic(cohort, require_undiagnosed=False)
        assert [s.id for s in kept_all] == ["s00001", "s00002"]

    def test_empty_in_empty_out(self):
        assert len(filter_analytic(Cohort(()))) == 0

    def test_matches_linear_scan_oracle(self):
        rng = np.random.default_rng(4)
        subjects = tuple(
            mk_subject(i, 1.0, True, cag=int(rng.integers(36, 60)), dcl=int(rng.integers(0, 5)))
            for i in range(300)
        )
        cohort = Cohort(subjects)
        kept = filter_analytic(cohort, 40, 57, True)
        expected = [s.id for s in subjects if 40 <= s.cag <= 57 and s.dcl < 4]
        assert [s.id for s in kept] == expected

    def test_idempotent(self):
        cohort = simulate(SimSpec(n=500, seed=9))
        once = filter_analytic(cohort, 41, 48, True)
        twice = filter_analytic(once, 41, 48, True)
        assert once.subjects == twice.subjects


class TestSummarize:
    def test_counts_and_total(self):
        cohort = simulate(SimSpec(n=800, seed=12))
        summary = summarize(cohort)
        assert summary.n_total == len(cohort) == summary.n_event + summary.n_censored
        assert summary.n_event == cohort.n_events

    def test_single_subject_sd_absent(self):
        cohort = mk_cohort([(2.0, True)])
        summary = summarize(cohort)
        n, mean, sd = summary.continuous["age_enroll"]["diagnosed"]
        assert n == 1 and mean == 40.0 and sd is None

    def test_stratified_mean_sd_against_numpy(self):
        cohort = simulate(SimSpec(n=600, seed=13))
        summary = summarize(cohort)
        ages = np.array([s.age_enroll for s in cohort if not s.event])
        n, mean, sd = summary.continuous["age_enroll"]["censored"]
        assert n == ages.size
        assert mean == pytest.approx(ages.mean(), abs=1e-12)
        assert sd == pytest.approx(ages.std(ddof=1), abs=1e-12)

    def test_generator_means_within_3_se(self):
        # strata are selected on the outcome, so compare pooled means
        spec = SimSpec(n=4000, seed=21)
        cohort = simulate(spec)
        values = np.array([s.cag for s in cohort], dtype=float)
        assert abs(values.mean() - spec.cag_mean) < 3 * spec.cag_sd / np.sqrt(len(cohort))
        ages = np.array([s.age_enroll for s in cohort])
        assert abs(ages.mean() - spec.age_mean) < 3 * spec.age_sd / np.sqrt(len(cohort))

    def test_percentages_sum_to_100(self):
        cohort = simulate(SimSpec(n=900, seed=14))
        summary = summarize(cohort)
        for field in ("dcl", "sex"):
            for stratum, levels in summary.categorical[field].items():
                total = sum(pct for _, pct in levels.values())
                assert total == pytest.approx(100.0, abs=0.1)

    def test_empty_cohort_rejected(self):
        with pytest.raises(DataError):
            summarize(Cohort(()))

    def test_json_text_render(self):
        cohort = simulate(SimSpec(n=100, seed=15))
        summary = summarize(cohort)
        doc = summary.to_json_dict()
        assert doc["n_total"] == 100
        text = summary.to_text()
        assert "n_total = 100" in text
