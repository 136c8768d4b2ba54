import math

import numpy as np
import pytest

from dipole_entangle.sources import SourcePairConfig

ACCEPTANCE_LINES = []


@pytest.fixture
def cfg():
    return SourcePairConfig()


@pytest.fixture
def far_cfg():
    """Widely separated sources: collective emission terms below 1e-7."""
    return SourcePairConfig(k0d=2.0 * math.pi * 1000.0)


def random_state(rng, dim=9):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
