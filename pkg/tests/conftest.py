import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from akns_ist import SampledPotential  # noqa: E402

# criterion number -> [title, all passed so far, details]
_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, [title, True, []])
    entry[1] = entry[1] and rep.passed
    notes = getattr(item, "_criterion_notes", [])
    status = "ok" if rep.passed else rep.outcome
    entry[2].append(f"{item.name}: {status}" + (f" [{', '.join(notes)}]" if notes else ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, details = _CRITERIA[n]
        terminalreporter.write_line(
            f"criterion {n} [{title}]: {'PASS' if ok else 'FAIL'} ({'; '.join(details)})")


@pytest.fixture
def note(request):
    """note(msg): attach a measured value to this test's criterion summary line."""
    notes = request.node._criterion_notes = []

    def add(msg):
        notes.append(msg)
        print(msg)

    return add


@pytest.fixture
def small_x():
    return np.linspace(-12.0, 12.0, 1201)


@pytest.fixture
def sech_potential(small_x):
    return SampledPotential.focusing(small_x, 1.0 / np.cosh(small_x))


@pytest.fixture
def kdv_sech2(small_x):
    return SampledPotential.kdv(small_x, 2.0 / np.cosh(small_x) ** 2)
