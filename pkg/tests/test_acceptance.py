"""One test per acceptance criterion, each at its stated tolerance.

Every result line is echoed immediately and repeated in the terminal summary.
"""

import time

import pytest

from denseeit.acceptance import CRITERIA

RESULTS = {}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    t0 = time.perf_counter()
    result = CRITERIA[number]()
    result.seconds = time.perf_counter() - t0
    RESULTS[number] = result
    print(result.line())
    assert result.passed, result.line()
