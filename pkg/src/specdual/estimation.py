"""Covariance lags, windowed correlograms, and the output-covariance estimate.

Sigma_hat is computed as the integral of G Omega G*, so the correlogram
condition linking Sigma_hat and Omega holds by construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParameterError, StructuralError
from .filterbank import StateSpaceFilter, evaluate, output_covariance
from .freqgrid import FrequencyGrid, SpectralDensity, hermitize

WINDOWS = ("rectangular", "bartlett")


@dataclass(eq=False)
class TimeSeries:
    """N x m real record, rows = time steps."""

    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim == 1:
            self.samples = self.samples.reshape(-1, 1)
        if self.samples.ndim != 2:
            raise StructuralError("time series must be an N x m array")
        if self.samples.shape[0] < 2:
            raise ParameterError("need at least 2 samples")
        if not np.all(np.isfinite(self.samples)):
            raise DataError("time series contains non-finite entries")

    @property
    def N(self) -> int:
        return self.samples.shape[0]

    @property
    def m(self) -> int:
        return self.samples.shape[1]


@dataclass(eq=False)
class CovarianceSequence:
    """Biased sample covariances R_0..R_M, each m x m."""

    lags: list

    def __post_init__(self):
        self.lags = [np.atleast_2d(np.asarray(R, dtype=float)) for R in self.lags]
        if not self.lags:
            raise ParameterError("need at least lag zero")
        m = self.lags[0].shape[0]
        if any(R.shape != (m, m) for R in self.lags):
            raise StructuralError("all lags must be m x m")
        R0 = self.lags[0]
        if np.linalg.norm(R0 - R0.T) > 1e-10 * (1.0 + np.linalg.norm(R0)):
            raise StructuralError("lag zero must be symmetric")
        if np.linalg.eigvalsh(0.5 * (R0 + R0.T)).min() < -1e-10 * (1.0 + np.trace(R0)):
            raise DataError("lag zero is not positive semidefinite")

    @property
    def M(self) -> int:
        return len(self.lags) - 1

    @property
    def m(self) -> int:
        return self.lags[0].shape[0]


@dataclass(eq=False)
class CovarianceEstimate:
    """Sigma_hat with provenance (window kind, lag budget, grid size)."""

    sigma: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        n = self.sigma.shape[0]
        if self.sigma.shape != (n, n):
            raise StructuralError("sigma must be square")
        if np.linalg.norm(self.sigma - self.sigma.T) > 1e-9 * (
            1.0 + np.linalg.norm(self.sigma)
        ):
            raise StructuralError("sigma must be symmetric")
        self.sigma = 0.5 * (self.sigma + self.sigma.T)
        eigs = np.linalg.eigvalsh(self.sigma)
        tr = np.trace(self.sigma)
        if eigs.min() < -1e-10 * max(tr, 1e-300):
            raise DataError(f"sigma is not PSD: min eigenvalue {eigs.min():.3e}")
        self.positive_definite = bool(eigs.min() > 1e-10 * tr)

    @property
    def n(self) -> int:
        return self.sigma.shape[0]


def demean(y: TimeSeries) -> TimeSeries:
    """Subtract per-channel means."""
    return TimeSeries(y.samples - y.samples.mean(axis=0))


def sample_covariances(y: TimeSeries, M: int) -> CovarianceSequence:
    """Biased (1/N) lags R_k = (1/N) sum_t y(t+k) y(t)^T for k = 0..M."""
    if M < 0 or M >= y.N:
        raise ParameterError(f"lag budget must satisfy 0 <= M < N, got M={M}, N={y.N}")
    s = y.samples
    lags = [(s[k:].T @ s[: y.N - k]) / y.N for k in range(M + 1)]
    lags[0] = 0.5 * (lags[0] + lags[0].T)
    return CovarianceSequence(lags)


def _window_weights(M: int, window: str) -> np.ndarray:
    if window not in WINDOWS:
        raise ParameterError(f"window must be one of {WINDOWS}, got {window!r}")
    if window == "rectangular":
        return np.ones(M + 1)
    return 1.0 - np.arange(M + 1) / (M + 1.0)


def correlogram(
    c: CovarianceSequence, window: str, grid: FrequencyGrid
) -> SpectralDensity:
    """Windowed correlogram Omega(theta) = sum_l w_l R_|l| e^{-j l theta}.

    Positivity is not enforced here; run check_positive before using the
    result as a density.
    """
    w = _window_weights(c.M, window)
    theta = grid.thetas
    m = c.m
    samples = np.zeros((grid.nf, m, m), dtype=complex)
    samples += w[0] * c.lags[0]
    for ell in range(1, c.M + 1):
        phase = np.exp(-1j * ell * theta)[:, None, None]
        R = c.lags[ell]
        samples += w[ell] * (phase * R + phase.conj() * R.T)
    omega = SpectralDensity(grid, hermitize(samples), require_pd=False)
    omega.provenance = {"window": window, "max_lag": c.M, "grid_points": grid.nf}
    return omega


def check_positive(omega: SpectralDensity) -> dict:
    """Scan the grid for the minimum eigenvalue; raise if Omega is not PD."""
    eigs = np.linalg.eigvalsh(omega.samples)
    mins = eigs.min(axis=1) if eigs.ndim == 2 else eigs
    worst = int(np.argmin(mins))
    report = {
        "min_eig": float(mins[worst]),
        "argmin_theta": float(omega.grid.thetas[worst]),
    }
    if report["min_eig"] <= 0.0:
        raise DataError(
            f"correlogram is not positive on the grid "
            f"(min eigenvalue {report['min_eig']:.3e} at "
            f"theta={report['argmin_theta']:.6f}); try the Bartlett window, "
            f"a longer record, or fewer lags"
        )
    return report


def sigma_hat(G: StateSpaceFilter, omega: SpectralDensity) -> CovarianceEstimate:
    """Sigma_hat = integral of G Omega G*, with provenance from the correlogram."""
    sigma = output_covariance(G, omega)
    provenance = dict(getattr(omega, "provenance", {}))
    return CovarianceEstimate(sigma, provenance)
