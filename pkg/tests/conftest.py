import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ljsaa.coordinates import coordinate  # noqa: E402
from ljsaa.model import builtin_example1, enumerate_scenarios  # noqa: E402

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, text = mark.args
    if rep.when == "setup" and rep.passed:
        return
    _CRITERIA[n] = (text, rep.outcome, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        text, outcome, dur = _CRITERIA[n]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict}  {text}  ({dur:.1f} s)")


@pytest.fixture(scope="session")
def ex1():
    program, dist = builtin_example1()
    return program, dist, enumerate_scenarios(dist, program.template)


@pytest.fixture(scope="session")
def ex1_coords(ex1):
    program, _, scenarios = ex1
    return [coordinate(program, s) for s in scenarios]
