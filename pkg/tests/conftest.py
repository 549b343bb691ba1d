import random

import pytest

from adtnsim.config import config_from_dict
from adtnsim.wire import GroupKey


def make_key(label: str = "G", seed: int = 0) -> GroupKey:
    rng = random.Random(f"{label}/{seed}")
    return GroupKey(group_id=label, key=rng.randbytes(32))


def scenario(**overrides) -> dict:
    """Small static scenario dict; override freely per test."""
    base = {
        "seed": 5,
        "total_ticks": 400,
        "frame_size": 256,
        "arena": {"width": 400.0, "height": 400.0, "radio_range": 150.0},
        "nodes": {"count": 6, "placement": "uniform"},
        "policies": {"tx_period": 2},
        "groups": [
            {"id": "A", "members": [0, 1, 2, 3]},
            {"id": "B", "members": [3, 4, 5]},
        ],
        "traffic": [{"tick": 4, "node": 0, "payload": "greetings"}],
    }
    base.update(overrides)
    return base


@pytest.fixture
def rng():
    return random.Random(1234)


# acceptance verdict lines, echoed after the test summary so they survive
# output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def build(**overrides):
    return config_from_dict(scenario(**overrides))
