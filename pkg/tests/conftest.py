from __future__ import annotations

import os

import pytest

from gerrygrid.enumeration import PlanSet, VoterDistribution, enumerate_plans
from gerrygrid.grid_graph import DualGraph, eight_block_graph, grid_graph

# Worked-example distributions on the 5x5 grid, row 0 first.
SAMPLE_GRIDS: dict[str, str] = {
    "split_ten": "..***\n****.\n**...\n*....\n.....",
    "best9": "....*\n....*\n...**\n..**.\n.***.",
    "best10": "....*\n...**\n...**\n..**.\n.***.",
    "best11": "..***\n...*.\n...**\n..*.*\n.***.",
    "worst9": ".*..*\n*..*.\n..*..\n.*..*\n*..*.",
    "worst10": ".*..*\n*.*..\n.*.*.\n..*.*\n*..*.",
    "worst11": ".*.*.\n..*.*\n**.*.\n..*.*\n*..*.",
}

SPLIT_TEN_LEFT_PLAN = "0001122031220312443144433"
SPLIT_TEN_RIGHT_PLAN = "0111100001223332224344443"


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption("--runslow", action="store_true", default=False, help="run long exhaustive checks")



def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if config.getoption("--runslow") or os.getenv("GERRYGRID_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow or GERRYGRID_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch: pytest.MonkeyPatch, tmp_path) -> None:
    for name in list(os.environ):
        if name.startswith("GERRYGRID_") and name != "GERRYGRID_RUN_SLOW":
            monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("GERRYGRID_OUTPUT_DIR", str(tmp_path / "output"))
    monkeypatch.chdir(tmp_path)


@pytest.fixture(scope="session")
def grid5() -> DualGraph:
    return grid_graph(5, 5)


@pytest.fixture(scope="session")
def grid4() -> DualGraph:
    return grid_graph(4, 4)


@pytest.fixture(scope="session")
def example_graph() -> DualGraph:
    return eight_block_graph()


@pytest.fixture(scope="session")
def plans3() -> PlanSet:
    return enumerate_plans(3)


@pytest.fixture(scope="session")
def plans4() -> PlanSet:
    return enumerate_plans(4)


@pytest.fixture(scope="session")
def plans5() -> PlanSet:
    return enumerate_plans(5)


@pytest.fixture(scope="session")
def sample_grids() -> dict[str, VoterDistribution]:
    return {name: VoterDistribution.from_grid(text) for name, text in SAMPLE_GRIDS.items()}


@pytest.fixture(scope="session")
def split_ten_plans() -> tuple[str, str]:
    return SPLIT_TEN_LEFT_PLAN, SPLIT_TEN_RIGHT_PLAN
