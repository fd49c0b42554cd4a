import functools

import pytest

from rank1lab.construction import preset
from rank1lab.correlation import LevelAlgebra


@functools.lru_cache(maxsize=None)
def algebra(name: str, base: int, target: int) -> LevelAlgebra:
    return LevelAlgebra(preset(name), base, target)


@pytest.fixture(scope="session")
def get_algebra():
    return algebra


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
