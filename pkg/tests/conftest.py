import numpy as np
import pytest

import rieszfrac as rf


@pytest.fixture(scope="session")
def cantor13():
    return rf.cantor("1/3")


@pytest.fixture(scope="session")
def thin_uniform():
    return rf.uniform_line(2, 0.1)


@pytest.fixture(scope="session")
def mixed_fractal():
    # ratios 1/2 and 1/4 on [0, 1]; images [0, 1/2] and [3/4, 1]
    maps = (
        rf.Similitude(0.5, np.array([[1.0]]), np.array([0.0])),
        rf.Similitude(0.25, np.array([[1.0]]), np.array([0.75])),
    )
    return rf.make_fractal(maps, label="two-scale", diameter=1.0, sigma=0.25)


@pytest.fixture(scope="session")
def cantor_minimizers(cantor13):
    """Lift-seeded minimizers at N = 2^k, k = 2..9, for s = 3."""
    opts = rf.SearchOptions(seed=0, restarts=2, strategy="lift-seeded")
    out = {}
    for k in range(2, 10):
        N = 2 ** k
        out[N] = rf.local_search_minimize(cantor13, N, 3.0, opts)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)
