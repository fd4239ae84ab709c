import os

import pytest

from oracle_sweep import FIXTURES, sweep

_criteria = {}


@pytest.fixture(scope="session")
def bv8_rows():
    return sweep(os.path.join(FIXTURES, "bv8_corpus.rbl"))


@pytest.fixture(scope="session")
def include_rows():
    return sweep(os.path.join(FIXTURES, "include_literals.rbl"))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    ok = _criteria.get(n, (title, True))[1]
    if report.failed or (report.when == "call" and report.skipped):
        ok = False
    _criteria[n] = (title, ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, ok = _criteria[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}")
