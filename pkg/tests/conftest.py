import time

import numpy as np
import pytest

import acceptance_log

SUITE_LIMIT_S = 300.0
_START = time.perf_counter()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_log.LINES:
        terminalreporter.write_line(line)
    # the runtime bound covers the whole session, so it can only be judged here
    elapsed = time.perf_counter() - _START
    verdict = "PASS" if elapsed < SUITE_LIMIT_S else "FAIL"
    terminalreporter.write_line(f"criterion 8 (suite runtime): {verdict}  whole run {elapsed:.1f} s, limit {SUITE_LIMIT_S:.0f} s")
