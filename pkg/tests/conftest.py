"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_outcomes: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    report = outcome.get_result()
    number, title = marker.args
    passed = _outcomes.get(number, (True, title))[0]
    if report.when == "call" or report.failed:
        # a criterion split over several tests passes only if all of them do
        _outcomes[number] = (passed and report.passed, title)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        passed, title = _outcomes[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}")
