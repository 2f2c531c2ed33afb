import warnings

import pytest

from origami_rigidity import GeometryWarning, load_fixture
from origami_rigidity.fixtures import fixture_names

ACCEPTANCE_LINES: list[str] = []

ALL_FIXTURES = fixture_names(include_extra=True)
BUILTIN_FIXTURES = fixture_names()


@pytest.fixture(scope="session")
def papers():
    return {n: load_fixture(n) for n in ALL_FIXTURES}


@pytest.fixture(autouse=True)
def _quiet_geometry():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GeometryWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
