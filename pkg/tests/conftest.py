import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criteria gate")
    config.addinivalue_line("markers", "slow: long-running numerical check")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import summary_lines
    except ImportError:
        return
    lines = summary_lines()
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
