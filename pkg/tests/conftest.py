import numpy as np
import pytest

from birkdag.sem import CholeskyFactor, SampleCovariance


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_covariance(p, n, rng):
    """Sample covariance of n Gaussian rows; PD whenever n > p."""
    x = rng.standard_normal((n, p))
    s = x.T @ x / n
    return SampleCovariance(0.5 * (s + s.T))


def random_cholesky(p, rng, density=0.5, scale=1.0):
    """Random lower-triangular factor with positive diagonal."""
    l = np.tril(rng.standard_normal((p, p)) * scale, -1)
    l[rng.random((p, p)) > density] = 0.0
    l = np.tril(l, -1)
    l[np.arange(p), np.arange(p)] = rng.uniform(0.5, 2.0, size=p)
    return CholeskyFactor(l)


def ul_cholesky(m):
    """Lower-triangular L with positive diagonal such that L^t L = m.

    Standard Cholesky factors m as G G^t with G lower; conjugating by the
    exchange matrix turns that into the U U^t form whose transpose is the
    wanted L.
    """
    m = np.asarray(m, dtype=float)
    e = np.eye(m.shape[0])[::-1]
    g = np.linalg.cholesky(e @ m @ e)
    return (e @ g @ e).T
