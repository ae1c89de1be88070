"""Acceptance matrix, one test per criterion at the stated tolerances and time limits.

Each test prints a single pass/fail line; the lines are repeated in the
terminal summary.
"""

import pytest

from wscdecomp.suite import CHECKS

SEED = 7
RESULTS = {}


@pytest.mark.parametrize("criterion", range(1, len(CHECKS) + 1))
def test_criterion(criterion):
    res = CHECKS[criterion - 1](SEED)
    RESULTS[criterion] = res
    print(res.line())
    assert res.passed, res.details
