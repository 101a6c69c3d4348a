import re

import pytest

_CRITERION = re.compile(r"test_criterion_(\d+)_")
_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance or sweep test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = _CRITERION.search(item.name)
    if not m:
        return
    n = int(m.group(1))
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _outcomes[n] = (rep.outcome, item.name)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        outcome, name = _outcomes[n]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  ({name})")
