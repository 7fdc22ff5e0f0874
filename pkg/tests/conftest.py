import numpy as np
import pytest

_acceptance: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: end-to-end acceptance checks with fixed tolerances"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.get_closest_marker("acceptance"):
        _acceptance.append((item.name, "PASS" if rep.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, verdict in _acceptance:
        terminalreporter.write_line(f"  [{verdict}] {name}")


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
