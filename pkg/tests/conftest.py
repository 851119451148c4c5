import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--long-running",
        action="store_true",
        default=False,
        help="run d >= 1000 Monte Carlo checks (several minutes)",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--long-running"):
        return
    skip = pytest.mark.skip(reason="needs --long-running")
    for item in items:
        if "long_running" in item.keywords:
            item.add_marker(skip)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
