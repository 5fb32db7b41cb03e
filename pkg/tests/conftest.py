"""Per-criterion PASS/FAIL reporting for the acceptance suite."""

import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")
_results = {}


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    number = int(match.group(1))
    if report.when == "call":
        _results[number] = report.passed
    elif report.when == "setup" and report.failed:
        _results[number] = False


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        verdict = "PASS" if _results[number] else "FAIL"
        terminalreporter.write_line(f"[acceptance] criterion {number}: {verdict}")
