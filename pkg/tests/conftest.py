import numpy as np
import pytest

from growthnet import build_model


@pytest.fixture
def tiny_model():
    """m=2 monomers, two identical filaments with kappa=1 (hand-enumerable)."""
    return build_model(2, [(1.0, 2)])


def tv(a, b):
    n = max(len(a), len(b))
    a = np.pad(np.asarray(a, float), (0, n - len(a)))
    b = np.pad(np.asarray(b, float), (0, n - len(b)))
    return 0.5 * float(np.abs(a - b).sum())


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
