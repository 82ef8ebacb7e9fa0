from __future__ import annotations

import pytest

from mbqclab import exercises

IDS = [s.exercise for s in exercises.EXERCISES]


@pytest.mark.parametrize("spec", exercises.EXERCISES, ids=IDS)
def test_exercise(spec):
    result = exercises.run_exercise(spec)
    assert result.passed, f"exercise {spec.exercise} deviation {result.deviation:.3e}"


def test_mapping_covers_all_sixteen():
    assert {int("".join(c for c in e if c.isdigit())) for e in IDS} == set(range(1, 17))
    assert [e for e in IDS if e.startswith("16")] == ["16a", "16b", "16c", "16d"]
    for spec in exercises.EXERCISES:
        assert spec.test_id == f"test_exercises::test_exercise[{spec.exercise}]"


def test_result_json_fields():
    data = exercises.run_exercise(exercises.EXERCISES[0]).to_json()
    assert set(data) == {"exercise", "title", "operation", "passed", "max_deviation", "tolerance", "details"}


def test_tight_tolerance_reports_failure():
    result = exercises.run_exercise(exercises.EXERCISES[9], tol=1e-30)
    assert result.deviation > 0 and not result.passed
