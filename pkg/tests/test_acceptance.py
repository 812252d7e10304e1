"""Acceptance criteria 1-12, one PASS/FAIL line each at the stated tolerances.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines live; they
are also attached to each test report.
"""
import pytest

from gpscatter.acceptance import CRITERIA

SLOW = {3, 8}


@pytest.mark.parametrize(
    "criterion_id",
    [pytest.param(k, marks=pytest.mark.slow) if k in SLOW else k for k in sorted(CRITERIA)],
)
def test_acceptance_criterion(criterion_id, record_property):
    result = CRITERIA[criterion_id]()
    line = result.line()
    print(line)
    record_property("criterion", line)
    assert result.passed, line
