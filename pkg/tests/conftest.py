import numpy as np
import pytest

from ghostmask import PhantomSpec, make_phantom

ACCEPTANCE = {}


def check(number, passed, detail):
    """Record one acceptance line (printed in the terminal summary) and fail
    the test with that line when the criterion is not met."""
    line = f"CRITERION {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    if not passed:
        pytest.fail(line, pytrace=False)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])


@pytest.fixture
def star():
    return make_phantom(PhantomSpec("siemens_star", radius=21))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
