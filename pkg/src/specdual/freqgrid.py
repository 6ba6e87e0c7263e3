"""Uniform frequency grids on the unit circle and the matrix calculus on them.

Matrix-valued functions are stored as dense complex arrays of shape
(nf, p, q), one matrix per grid point theta_k = 2*pi*k/nf.  Integration is the
periodic rectangle rule, which is exact for trigonometric polynomials of
degree < nf.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    NumericalConsistencyError,
    ParameterError,
    StructuralError,
)

DEFAULT_GRID_POINTS = 2048
HERMITIAN_RTOL = 1e-12
IMAG_RTOL = 1e-9


@dataclass(eq=False)
class FrequencyGrid:
    """nf equispaced points theta_k = 2*pi*k/nf on [0, 2*pi)."""

    nf: int
    thetas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.nf < 4 or self.nf % 2 != 0:
            raise ParameterError(f"grid size must be even and >= 4, got {self.nf}")
        self.thetas = 2.0 * np.pi * np.arange(self.nf) / self.nf

    def __eq__(self, other):
        return isinstance(other, FrequencyGrid) and self.nf == other.nf

    def __hash__(self):
        return hash(("FrequencyGrid", self.nf))


@dataclass(eq=False)
class MatrixFunction:
    """Sampled matrix-valued function on a FrequencyGrid.

    samples has shape (nf, p, q); p == q is not required (filter responses are
    n x m).
    """

    grid: FrequencyGrid
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.ndim == 1:
            self.samples = self.samples.reshape(-1, 1, 1)
        if self.samples.ndim != 3:
            raise StructuralError(
                f"samples must be (nf, p, q), got shape {self.samples.shape}"
            )
        if self.samples.shape[0] != self.grid.nf:
            raise StructuralError(
                f"sample count {self.samples.shape[0]} != grid size {self.grid.nf}"
            )

    @property
    def rows(self) -> int:
        return self.samples.shape[1]

    @property
    def cols(self) -> int:
        return self.samples.shape[2]

    @property
    def m(self) -> int:
        if self.rows != self.cols:
            raise StructuralError("non-square matrix function has no channel size")
        return self.rows


class SpectralDensity(MatrixFunction):
    """Hermitian (and normally positive definite) square MatrixFunction.

    k1/k2 witness the coercivity/boundedness of the sampled density.  With
    require_pd=False construction succeeds for indefinite samples (used for
    raw correlograms whose positivity is checked separately); k1 then records
    the possibly nonpositive minimum eigenvalue.
    """

    def __init__(self, grid, samples, require_pd: bool = True):
        super().__init__(grid, samples)
        if self.rows != self.cols:
            raise StructuralError("spectral density samples must be square")
        herm_defect = np.linalg.norm(
            self.samples - self.samples.conj().transpose(0, 2, 1), axis=(1, 2)
        )
        scale = np.linalg.norm(self.samples, axis=(1, 2))
        if np.any(herm_defect > HERMITIAN_RTOL * np.maximum(scale, 1e-300) + 1e-300):
            worst = int(np.argmax(herm_defect - HERMITIAN_RTOL * scale))
            raise DomainError(
                f"sample at theta={grid.thetas[worst]:.6f} is not Hermitian "
                f"(defect {herm_defect[worst]:.3e})"
            )
        self.samples = hermitize(self.samples)
        eigs = np.linalg.eigvalsh(self.samples)
        self.k1 = float(eigs.min())
        self.k2 = float(eigs.max())
        if require_pd and self.k1 <= 0.0:
            raise DomainError(
                f"density is not positive definite on the grid: "
                f"min eigenvalue {self.k1:.3e}"
            )


def hermitize(samples: np.ndarray) -> np.ndarray:
    """(H + H*)/2 per sample; suppresses floating-point drift."""
    return 0.5 * (samples + samples.conj().transpose(0, 2, 1))


def constant_function(grid: FrequencyGrid, matrix) -> MatrixFunction:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    return MatrixFunction(grid, np.broadcast_to(matrix, (grid.nf, *matrix.shape)).copy())


def constant_density(grid: FrequencyGrid, matrix, require_pd: bool = True) -> SpectralDensity:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    return SpectralDensity(
        grid, np.broadcast_to(matrix, (grid.nf, *matrix.shape)).copy(), require_pd=require_pd
    )


def scalar_density(grid: FrequencyGrid, values, require_pd: bool = True) -> SpectralDensity:
    """Scalar (m=1) density from an nf-vector of real samples."""
    values = np.asarray(values, dtype=complex).reshape(-1, 1, 1)
    return SpectralDensity(grid, values, require_pd=require_pd)


def integrate(f: MatrixFunction) -> np.ndarray:
    """Rectangle-rule integral over the normalized unit-circle measure."""
    return f.samples.mean(axis=0)


def trace_integral(f: MatrixFunction) -> float:
    """Real part of trace(integrate(f)); rejects nonnegligible imaginary part."""
    tr = np.trace(integrate(f))
    if abs(tr.imag) > IMAG_RTOL * (1.0 + abs(tr.real)):
        raise NumericalConsistencyError(
            f"trace integral has imaginary residue {tr.imag:.3e}"
        )
    return float(tr.real)


def _check_hermitian(H: np.ndarray) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise StructuralError("expected a square matrix")
    if np.linalg.norm(H - H.conj().T) > HERMITIAN_RTOL * (1.0 + np.linalg.norm(H)):
        raise DomainError("matrix is not Hermitian")
    return 0.5 * (H + H.conj().T)


def matrix_power(H, p: float) -> np.ndarray:
    """Fractional power of a Hermitian PD matrix via eigendecomposition."""
    H = _check_hermitian(H)
    if p == 1:
        return H.copy()
    if p == 0:
        return np.eye(H.shape[0], dtype=complex)
    w, V = np.linalg.eigh(H)
    if w.min() <= 0.0:
        raise DomainError(f"matrix_power requires PD input; min eigenvalue {w.min():.3e}")
    out = (V * w**p) @ V.conj().T
    return 0.5 * (out + out.conj().T)


def matrix_log(H) -> np.ndarray:
    """Matrix logarithm of a Hermitian PD matrix."""
    H = _check_hermitian(H)
    w, V = np.linalg.eigh(H)
    if w.min() <= 0.0:
        raise DomainError(f"matrix_log requires PD input; min eigenvalue {w.min():.3e}")
    out = (V * np.log(w)) @ V.conj().T
    return 0.5 * (out + out.conj().T)


def power_of_samples(samples: np.ndarray, p: float) -> np.ndarray:
    """Pointwise Hermitian fractional power of a (nf, m, m) stack."""
    if samples.shape[1] == 1:
        vals = samples[:, 0, 0].real
        if vals.min() <= 0.0:
            raise DomainError(
                f"pointwise power requires PD samples; min value {vals.min():.3e}"
            )
        return (vals**p).reshape(-1, 1, 1).astype(complex)
    w, V = np.linalg.eigh(samples)
    if w.min() <= 0.0:
        raise DomainError(
            f"pointwise power requires PD samples; min eigenvalue {w.min():.3e}"
        )
    out = (V * (w**p)[:, None, :]) @ V.conj().transpose(0, 2, 1)
    return hermitize(out)


def log_of_samples(samples: np.ndarray) -> np.ndarray:
    """Pointwise Hermitian logarithm of a (nf, m, m) stack."""
    if samples.shape[1] == 1:
        vals = samples[:, 0, 0].real
        if vals.min() <= 0.0:
            raise DomainError(
                f"pointwise log requires PD samples; min value {vals.min():.3e}"
            )
        return np.log(vals).reshape(-1, 1, 1).astype(complex)
    w, V = np.linalg.eigh(samples)
    if w.min() <= 0.0:
        raise DomainError(
            f"pointwise log requires PD samples; min eigenvalue {w.min():.3e}"
        )
    out = (V * np.log(w)[:, None, :]) @ V.conj().transpose(0, 2, 1)
    return hermitize(out)
