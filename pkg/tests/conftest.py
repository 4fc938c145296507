import numpy as np
import pytest

from cbsfit.synthetic import make_preset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def four_lines():
    return make_preset("four-lines", seed=0)


ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    """Log one acceptance line; ``passed=None`` marks a skipped criterion."""
    status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
    line = f"{status} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":").split(".")[0])):
            terminalreporter.write_line(line)
