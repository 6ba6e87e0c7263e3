import numpy as np
import pytest

from specdual.freqgrid import FrequencyGrid, scalar_density


@pytest.fixture(scope="session")
def grid():
    return FrequencyGrid(2048)


@pytest.fixture(scope="session")
def small_grid():
    return FrequencyGrid(256)


def ar1_density(grid, a=0.5, var=1.0):
    """Exact AR(1) spectrum var / |1 - a e^{-j theta}|^2."""
    return scalar_density(grid, var / np.abs(1.0 - a * np.exp(-1j * grid.thetas)) ** 2)


def arma_record(N=4096, seed=0, burn=200):
    """Scalar ARMA(2,1) record: y = 1.2 y_1 - 0.4 y_2 + e + 0.3 e_1."""
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(N + burn)
    y = np.zeros(N + burn)
    for t in range(2, N + burn):
        y[t] = 1.2 * y[t - 1] - 0.4 * y[t - 2] + e[t] + 0.3 * e[t - 1]
    return y[burn:]


def exact_ar2_lags(count, a1=1.2, a2=-0.4, nf=8192):
    """Covariance lags of the unit-innovation AR(2) process, by quadrature."""
    theta = 2.0 * np.pi * np.arange(nf) / nf
    phi = 1.0 / np.abs(1.0 - a1 * np.exp(-1j * theta) - a2 * np.exp(-2j * theta)) ** 2
    return [float((phi * np.exp(1j * k * theta)).mean().real) for k in range(count)]
