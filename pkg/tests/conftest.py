import numpy as np
import pytest

from nlwlab.radial_field import FieldState, make_grid


@pytest.fixture(scope="session")
def grid():
    return make_grid(40.0, 1023)


@pytest.fixture(scope="session")
def gaussian(grid):
    return FieldState.from_profiles(grid, lambda r: np.exp(-r ** 2))


def gaussian_state(grid, amp=1.0, width=1.0, t=0.0):
    return FieldState.from_profiles(grid, lambda r: amp * np.exp(-(r / width) ** 2), t=t)


# acceptance criterion -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}
N_CRITERIA = 12


def record(k, passed, detail):
    ACCEPTANCE[k] = (bool(passed), detail)
    return passed


def pytest_terminal_summary(terminalreporter):
    ran = [i.nodeid for i in terminalreporter.stats.get("passed", []) +
           terminalreporter.stats.get("failed", []) if "test_acceptance" in i.nodeid]
    if not ran:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in range(1, N_CRITERIA + 1):
        ok, detail = ACCEPTANCE.get(k, (False, "did not complete"))
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
