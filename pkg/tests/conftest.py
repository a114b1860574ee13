from __future__ import annotations

import math

import numpy as np
import pytest


@pytest.fixture(scope="session")
def band_grid():
    """500 momenta strictly inside the band."""
    return np.linspace(-math.pi, 0, 502)[1:-1]


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for name, m in list(sys.modules.items()) if name.endswith("test_acceptance")), None)
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.verdict_line(n))
