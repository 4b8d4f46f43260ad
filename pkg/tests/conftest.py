from __future__ import annotations

import functools

import numpy as np
import pytest

from pieceable.pieceable import build_ccnot_A, build_ccnot_B


@functools.lru_cache(maxsize=None)
def circuit(name: str):
    return build_ccnot_A() if name == "A" else build_ccnot_B()


@pytest.fixture(scope="session")
def circ_a():
    return circuit("A")


@pytest.fixture(scope="session")
def circ_b():
    return circuit("B")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance report -----------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report():
    """``report(k, ok, detail)`` records and prints one pass/fail line for criterion ``k``."""
    def emit(k: int, ok: bool, detail: str) -> bool:
        line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[k] = line
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
