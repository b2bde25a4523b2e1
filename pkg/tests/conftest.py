import pytest

from helpers import ego_line, load


@pytest.fixture(scope="session")
def oval():
    return load("oval_chicane")


@pytest.fixture(scope="session")
def oval_line():
    return ego_line("oval_chicane")


@pytest.fixture(scope="session")
def kidney_line():
    return ego_line("kidney")


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split("] ")[1].split(".")[0])):
            terminalreporter.write_line(line)
