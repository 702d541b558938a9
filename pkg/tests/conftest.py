import re

import numpy as np
import pytest

ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store one acceptance line per criterion for the terminal summary."""

    def _record(key, ok, detail):
        ACCEPTANCE[key] = (bool(ok), detail)
        return ok

    return _record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}")
