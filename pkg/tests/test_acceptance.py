"""The twelve acceptance criteria at their stated tolerances, one test each."""

import pytest

from bvlab.harness.acceptance import CRITERIA, run_criterion

from conftest import ACCEPTANCE_LINES


SLOW = {3, 4, 5, 7, 9}


@pytest.mark.parametrize("number", [pytest.param(n, marks=pytest.mark.slow) if n in SLOW else n
                                    for n in sorted(CRITERIA)], ids=lambda n: f"AC{n}")
def test_acceptance_criterion(number):
    crit = run_criterion(number)
    line = crit.summary()
    ACCEPTANCE_LINES.append(line)
    print(line)
    for check in crit.checks:
        print("    " + check.line())
    failed = [c.line() for c in crit.checks if not c.passed]
    assert crit.passed, "\n".join(failed) or "no checks ran"
