import numpy as np
import pytest

from modvar.grid import DEFAULT_GRID, ModularGrid

# (criterion, passed, detail) rows filled in by test_acceptance
ACCEPTANCE_LINES: list[tuple[int, bool, str]] = []


@pytest.fixture
def record():
    def _record(n: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append((n, bool(ok), detail))
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    return _record


@pytest.fixture
def grid():
    return DEFAULT_GRID


@pytest.fixture
def small_grid():
    return ModularGrid(12, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
