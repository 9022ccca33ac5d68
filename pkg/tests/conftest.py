import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

REFERENCE_THETA1 = np.array([0.24, 0.37, 0.24, 0.38, 0.30, 0.32, 0.35, 0.30, 0.26, 0.24])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def reference_network():
    from wsndetect.network import generate_geometric_network

    return generate_geometric_network(10, 20, 100.0, seed=1)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(LINES):
            terminalreporter.write_line(LINES[n])
