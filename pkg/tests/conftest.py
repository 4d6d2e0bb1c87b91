import functools

import pytest

from crlab.analysis import analyze
from crlab.mesh import MeshParams, build_mesh
from crlab.solver import DIRECT_THRESHOLD

ACCEPTANCE_LINES: dict[int, str] = {}


@functools.lru_cache(maxsize=None)
def cached_mesh(n, m):
    return build_mesh(MeshParams(n, m))


@functools.lru_cache(maxsize=None)
def cached_point(n, m, friedrichs=False, direct_threshold=DIRECT_THRESHOLD):
    return analyze(n, m, friedrichs=friedrichs, direct_threshold=direct_threshold)


@pytest.fixture
def record():
    """Store the summary line of an acceptance criterion, then assert it."""

    def _record(number: int, ok: bool, detail: str):
        ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])
        assert ok, ACCEPTANCE_LINES[number]

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
