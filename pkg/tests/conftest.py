from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).resolve().parents[1] / "src" / "itervote" / "data"

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion checked by this test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = _markers.get(report.nodeid)
    if marker is None:
        return
    n, title = marker
    ok = report.outcome == "passed"
    prev = _criteria.get(n, (title, True))
    _criteria[n] = (title, prev[1] and ok)


_markers: dict = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _markers[item.nodeid] = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, ok = _criteria[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n:2d}: {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixture_csv():
    return DATA / "vote2017.csv"


@pytest.fixture
def fixture_spec():
    return DATA / "vote2017.spec.txt"
