import numpy as np
import pytest

from survmixclust.synth import generate

from acceptance_log import ACCEPTANCE_LINES
from synthetic import two_cluster_spec


@pytest.fixture(scope="session")
def small_two_cluster():
    return generate(two_cluster_spec(n=300, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
