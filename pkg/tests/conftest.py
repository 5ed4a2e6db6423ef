import pytest
from hypothesis import HealthCheck, settings

from dbctl import reference as ref
from dbctl.dsl import parse_problem
from dbctl.report import run_analysis

settings.register_profile(
    "repo", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def brach():
    return run_analysis(parse_problem(ref.BRACHISTOCHRONE))


@pytest.fixture(scope="session")
def quantum():
    return run_analysis(parse_problem(ref.QUANTUM))


@pytest.fixture(scope="session")
def lindblad():
    return run_analysis(parse_problem(ref.LINDBLAD))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
