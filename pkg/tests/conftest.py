import pytest

from ietflow import builtins
from ietflow.roof import Roof, RoofSpec

# filled by tests/test_acceptance.py: criterion number -> (status, detail)
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def golden():
    return builtins.get("golden")


@pytest.fixture(scope="session")
def genus2():
    return builtins.get("genus2-loop")


@pytest.fixture(scope="session")
def golden_roof(golden):
    return Roof(RoofSpec.single_pair(golden), golden)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {status}  {detail}")
