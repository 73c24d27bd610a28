import warnings

import numpy as np
import pytest

from fracbloch.weights import builtin_weight

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _quiet_numpy():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        with np.errstate(all="ignore"):
            yield


@pytest.fixture(scope="session")
def weights():
    return {
        "constant": builtin_weight("constant"),
        "std05": builtin_weight("standard", beta=0.5),
        "std1": builtin_weight("standard", beta=1.0),
        "std2": builtin_weight("standard", beta=2.0),
        "std37": builtin_weight("standard", beta=3.7),
        "exp": builtin_weight("exp", alpha=1.0, l=1.0, beta=1.0),
        "lograpid": builtin_weight("lograpid", alpha=2.0),
    }
