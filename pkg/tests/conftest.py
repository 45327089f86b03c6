import numpy as np
import pytest

from qmixlab.envs import SoccerEnv, scripted_opponent
from qmixlab.qlearn.dqn import TrainConfig, train_best_response
from qmixlab.qmix import ComponentSet

SOCCER_IDS = ("random", "chaser", "camper")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def soccer():
    return SoccerEnv()


@pytest.fixture(scope="session")
def soccer_pool():
    return {pid: scripted_opponent(pid) for pid in SOCCER_IDS}


@pytest.fixture(scope="session")
def small_components(soccer, soccer_pool):
    """Quickly trained tabular best responses plus their replay buffers."""
    cfg = TrainConfig(timesteps=20_000, variant="tabular", lr_mode="visit", exploration_fraction=0.6,
                      buffer_size=2000, seed=3)
    trained = {pid: train_best_response(soccer, pid, cfg, soccer_pool) for pid in SOCCER_IDS}
    comps = ComponentSet(SOCCER_IDS, [trained[p][0] for p in SOCCER_IDS])
    buffers = {p: trained[p][1] for p in SOCCER_IDS}
    return comps, buffers


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion and print it immediately."""

    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
