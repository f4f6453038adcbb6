import sys

import numpy as np
import pytest

from shtauc.objective import Dataset


def random_dataset(rng, n, d, n_pos=None, scale=1.0):
    """Gaussian features with both classes present."""
    if n_pos is None:
        n_pos = int(rng.integers(1, n))
    X = rng.standard_normal((n, d)) * scale
    y = np.full(n, -1)
    y[rng.choice(n, size=n_pos, replace=False)] = 1
    return Dataset(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
