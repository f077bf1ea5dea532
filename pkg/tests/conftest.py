from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("mfrac", max_examples=40, deadline=None)
settings.load_profile("mfrac")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, ok, detail)``."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_LINES, key=lambda t: (float(str(t[0]).rstrip("abcdefgh")), str(t[0]))):
        terminalreporter.write_line(line)
