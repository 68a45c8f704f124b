import numpy as np
import pytest

from aimole.trajectories import interleave


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def lifted(rows, dt=0.02):
    return interleave(np.asarray(rows, dtype=float), dt)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        ok, detail = RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
