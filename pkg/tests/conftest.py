import itertools
import math

import numpy as np
import pytest

from dimwit.quantum import bloch_correlations, optimal_qubit_I3_strategy

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")


def brute_force_vertices(n, m, d):
    """Every +-1 matrix with at most d distinct rows, by plain filtering of all 2^(nm)."""
    out = []
    for bits in itertools.product((1, -1), repeat=n * m):
        s = np.array(bits).reshape(n, m)
        if len({tuple(r) for r in s}) <= d:
            out.append(s)
    return out


@pytest.fixture(scope="session")
def i3_qubit_matrix():
    return bloch_correlations(optimal_qubit_I3_strategy())


SQRT2 = math.sqrt(2)
