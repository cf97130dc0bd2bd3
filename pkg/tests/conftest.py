import numpy as np
import pytest

ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def record():
    """Record one acceptance criterion's outcome for the end-of-run summary."""

    def put(number, title, ok, detail=""):
        ACCEPTANCE[number] = (title, bool(ok), detail)
        line = f"[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        print(line)

    return put


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        line = f"[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
