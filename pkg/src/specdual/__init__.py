"""Moment-constrained spectral estimation via convex dual problems."""

from . import divergence, dualsolver, estimation, filterbank, freqgrid, interpret
from .freqgrid import DEFAULT_GRID_POINTS, FrequencyGrid, MatrixFunction, SpectralDensity

__all__ = [
    "DEFAULT_GRID_POINTS",
    "FrequencyGrid",
    "MatrixFunction",
    "SpectralDensity",
    "divergence",
    "dualsolver",
    "estimation",
    "filterbank",
    "freqgrid",
    "interpret",
]

__version__ = "0.1.0"
