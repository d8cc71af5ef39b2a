import pathlib

import pytest

from occupancy_games.model import parse_posg, reinterpret_criterion

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"

# One-sided variant: agent 2's observation reveals agent 1's last action and
# observation exactly, so agent 2's private occupancy collapses to a belief.
ONE_SIDED = """
agents: 2
discount: 1.0
horizon: 2
criterion: common
states: tiger-left tiger-right
actions:
listen open
stay probe
observations:
hear-left hear-right
L-hl L-hr O-hl O-hr
start: 0.5 0.5
T: listen * : tiger-left : tiger-left : 1.0
T: listen * : tiger-left : tiger-right : 0.0
T: listen * : tiger-right : tiger-right : 1.0
T: listen * : tiger-right : tiger-left : 0.0
T: open * : * : * : 0.5
O: listen * : tiger-left : hear-left L-hl : 0.85
O: listen * : tiger-left : hear-right L-hr : 0.15
O: listen * : tiger-right : hear-left L-hl : 0.15
O: listen * : tiger-right : hear-right L-hr : 0.85
O: open * : * : hear-left O-hl : 0.5
O: open * : * : hear-right O-hr : 0.5
R1: * * : * : 0.5
R2: * * : * : 0.5
"""

MINIMAL = """
agents: 1
states: s
actions:
a
observations:
z
T: a : s : s : 1.0
O: a : s : z : 1.0
"""


def model_path(name: str) -> pathlib.Path:
    return MODELS / f"{name}.posg"


def load(name: str):
    return parse_posg(model_path(name).read_text())


@pytest.fixture(scope="session")
def tiger():
    return load("tiger")


@pytest.fixture(scope="session")
def tiger_zs():
    return load("tiger-zs")


@pytest.fixture(scope="session")
def one_stage():
    return load("tiger-one-stage")


@pytest.fixture(scope="session")
def one_stage_zs(one_stage):
    return reinterpret_criterion(one_stage, "zerosum")


@pytest.fixture(scope="session")
def one_stage_st(one_stage):
    return reinterpret_criterion(one_stage, "stackelberg")


@pytest.fixture(scope="session")
def st_tiger():
    return load("stackelberg-tiger")


@pytest.fixture(scope="session")
def one_sided():
    return parse_posg(ONE_SIDED)


@pytest.fixture(scope="session")
def minimal():
    return parse_posg(MINIMAL)
