import sys

import numpy as np
import pytest

from denseeit.config import derive_rates, load_preset


@pytest.fixture(scope="session")
def fig4():
    return load_preset("fig4")


@pytest.fixture(scope="session")
def baseline():
    return load_preset("fig3-baseline")


@pytest.fixture(scope="session")
def baseline_rates(baseline):
    return derive_rates(baseline)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    module = next((m for name, m in list(sys.modules.items())
                   if name.rpartition(".")[2] == "test_acceptance"), None)
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        r = results[number]
        terminalreporter.write_line(f"{r.line()}  ({r.seconds:.1f} s)")
