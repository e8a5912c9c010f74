"""Full acceptance suite at the stated tolerances.

Each criterion prints one ``[PASS]`` / ``[FAIL]`` line (run with ``-s`` to see them live;
they are also attached to the test report on failure).
"""

import pytest

from stochevol import acceptance

pytestmark = pytest.mark.slow

NUMBERS = list(range(1, 14))


@pytest.fixture(scope="session")
def suite():
    results = acceptance.run_suite(acceptance.DEFAULT_SEED, log=None)
    return {r.number: r for r in results}


@pytest.mark.parametrize("number", NUMBERS, ids=[fn.__name__ for fn in acceptance.CRITERIA])
def test_criterion(suite, number):
    res = suite[number]
    print(res.line())
    if not res.passed:
        pytest.fail(res.line())


def test_criterion_14_determinism(suite):
    first = acceptance.table_bytes([suite[k] for k in NUMBERS])
    rerun = acceptance.run_suite(acceptance.DEFAULT_SEED, log=None)
    res = acceptance.determinism(first, acceptance.table_bytes(rerun))
    print(res.line())
    if not res.passed:
        pytest.fail(res.line())
