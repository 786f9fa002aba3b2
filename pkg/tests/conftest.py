from fractions import Fraction

from hypothesis import strategies as st

small_int = st.integers(min_value=-6, max_value=6)
rationals = st.builds(Fraction, small_int, st.integers(min_value=1, max_value=5))
nonneg_rationals = st.builds(Fraction, st.integers(min_value=0, max_value=6),
                             st.integers(min_value=1, max_value=4))


import contextlib
import time

import pytest

_ACCEPTANCE: list = []


@pytest.fixture
def criterion():
    """``with criterion(n, title):`` prints and records one PASS/FAIL line."""

    @contextlib.contextmanager
    def record(number: int, title: str):
        start = time.perf_counter()
        status = "FAIL"
        try:
            yield
            status = "PASS"
        finally:
            line = f"[{status}] criterion {number:2d}: {title} ({time.perf_counter() - start:.2f}s)"
            print(line)
            _ACCEPTANCE.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
