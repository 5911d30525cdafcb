import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


def ring2d(n=3):
    m = np.ones((n, n), bool)
    m[1:-1, 1:-1] = False
    return m


def hline(shape=(9, 12), row=4, start=1, stop=11, width=1):
    m = np.zeros(shape, bool)
    h = width // 2
    m[row - h:row + h + 1, start:stop] = True
    return m


def disk(size, r, inner=None):
    yy, xx = np.mgrid[:size, :size]
    c = (size - 1) / 2
    d = (yy - c) ** 2 + (xx - c) ** 2
    m = d <= r * r
    if inner is not None:
        m &= d >= inner * inner
    return m


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
