"""Acceptance criteria 1-14 at seed 0.

Each criterion prints one PASS/FAIL line (also collected into the terminal
summary). Failing checks are reported with their expected and observed values.
"""
import json

import pytest

from harmonic_urn.verify import CRITERIA, run_criterion

from conftest import ACCEPTANCE_LINES

SEED = 0


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number):
    res = run_criterion(number, SEED)
    line = res.line()
    ACCEPTANCE_LINES[number] = line
    print(line)
    failed = [c.to_dict() for c in res.checks if not c.passed]
    assert res.passed, line + "\n" + json.dumps(failed, indent=1, default=str)
