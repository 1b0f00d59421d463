from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from robregret.example import scalar_plant

settings.register_profile(
    "default",
    deadline=None,
    max_examples=30,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []
INVARIANT_OUTCOMES: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "invariant: property from a module's invariant list")
    config.addinivalue_line("markers", "slow: runs syntheses")


def pytest_collection_modifyitems(config, items):
    # acceptance checks run last so the invariant outcomes of this session are known
    items.sort(key=lambda it: it.nodeid.startswith("tests/test_acceptance.py") or "test_acceptance.py" in it.nodeid)


def pytest_runtest_logreport(report):
    if "invariant" in report.keywords and (report.when == "call" or report.outcome != "passed"):
        prev = INVARIANT_OUTCOMES.get(report.nodeid)
        if prev != "failed":
            INVARIANT_OUTCOMES[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def plant():
    return scalar_plant()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
