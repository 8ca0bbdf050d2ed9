from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

settings.register_profile(
    "repo",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def dynamics_golden() -> dict:
    return json.loads((HERE / "golden" / "dynamics.json").read_text())


@pytest.fixture(scope="session")
def fig3():
    from sentinel.scenarios import fig3_scenario

    return fig3_scenario()


@pytest.fixture(scope="session")
def fig1():
    from sentinel.scenarios import fig1_scenario

    return fig1_scenario()


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
