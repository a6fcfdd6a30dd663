import numpy as np
import pytest

import steindisc as sd


def central_diff(f, x, step=None):
    """Central finite differences of a scalar function at x (1-D array)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    for d in range(x.size):
        h = step if step is not None else 1e-5 * (1.0 + abs(x[d]))
        e = np.zeros_like(x)
        e[d] = h
        out[d] = (f(x + e) - f(x - e)) / (2.0 * h)
    return out


def rel_err(got, want):
    got = np.asarray(got, dtype=np.float64)
    want = np.asarray(want, dtype=np.float64)
    return np.max(np.abs(got - want) / (1.0 + np.abs(want)))


@pytest.fixture(scope="session")
def gauss1():
    return sd.gaussian_model(1)


@pytest.fixture(scope="session")
def gauss5():
    return sd.gaussian_model(5)


@pytest.fixture(scope="session")
def small_sample():
    rng = np.random.default_rng(11)
    return sd.SampleSet(rng.standard_normal((60, 1)))
