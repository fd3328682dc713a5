import numpy as np
import pytest

from corrsir.scenario import hex_uma_scene


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def uma_center():
    return hex_uma_scene(ue_polar=(25.0, 0.0), p_default=0.5)


@pytest.fixture(scope="session")
def uma_edge():
    return hex_uma_scene(ue_polar=(225.0, 0.0), p_default=0.5)


def random_spd(rng, k, scale=1.0):
    a = rng.standard_normal((k, k))
    return scale * (a @ a.T + k * np.eye(k))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
