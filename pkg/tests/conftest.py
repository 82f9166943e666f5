import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

from acceptance_log import LINES as ACCEPTANCE_LINES  # noqa: E402
from osculator import ModelSpec, build_model  # noqa: E402


@pytest.fixture(scope="session")
def zoo():
    specs = {
        "euclidean": ModelSpec("euclidean", 2),
        "flat_polar": ModelSpec("flat_polar", 2),
        "sphere": ModelSpec("sphere", 2),
        "hyperbolic_half_plane": ModelSpec("hyperbolic_half_plane", 2),
        "randers": ModelSpec("randers", 2, {"b": [0.3, 0.0]}),
        "minkowski_norm": ModelSpec("minkowski_norm", 2),
    }
    return {k: build_model(s) for k, s in specs.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
