"""Divergence indices between spectral densities.

Covers Kullback-Leibler, Itakura-Saito, the Alpha/Beta/Tau one-parameter
families, and the two weighted Beta types with their weighted KL/IS limits.
Parameters exactly at 0 or 1 dispatch to the continuity-limit formulas.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    NegativeClampWarning,
    NumericalConsistencyError,
    ParameterError,
    StructuralError,
)
from .freqgrid import (
    MatrixFunction,
    SpectralDensity,
    hermitize,
    log_of_samples,
    power_of_samples,
)

NEGATIVE_FLOOR = -1e-9

FAMILIES = (
    "kl",
    "is",
    "alpha",
    "beta",
    "tau",
    "b1_weighted",
    "b2_weighted",
    "kl1_weighted",
    "kl2_weighted",
    "is_weighted",
)


@dataclass(eq=False)
class DivergenceSpec:
    """Family tag plus its parameter and optional weight data."""

    family: str
    parameter: float | None = None
    weight: SpectralDensity | None = None
    weight_factor: MatrixFunction | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown divergence family {self.family!r}")


def _aligned(phi, psi):
    if phi.grid != psi.grid:
        raise StructuralError("densities live on different grids")
    if phi.samples.shape != psi.samples.shape:
        raise StructuralError("densities have different channel counts")
    return phi.samples, psi.samples


def _finalize(value: float) -> float:
    if value < NEGATIVE_FLOOR:
        raise NumericalConsistencyError(
            f"divergence evaluated to {value:.3e}, below the clamp floor"
        )
    if value < 0.0:
        warnings.warn(
            f"clamped tiny negative divergence {value:.3e} to 0",
            NegativeClampWarning,
            stacklevel=3,
        )
        return 0.0
    return value


def _tr_int(samples: np.ndarray) -> float:
    return float(np.trace(samples.mean(axis=0)).real)


def kl(phi, psi) -> float:
    """tr int [Phi (log Phi - log Psi) - Phi + Psi]."""
    P, S = _aligned(phi, psi)
    integrand = P @ (log_of_samples(P) - log_of_samples(S)) - P + S
    return _finalize(_tr_int(integrand))


def is_dist(phi, psi) -> float:
    """tr int [log Psi - log Phi + Phi Psi^-1 - I]."""
    P, S = _aligned(phi, psi)
    eye = np.eye(P.shape[1])
    integrand = log_of_samples(S) - log_of_samples(P) + P @ power_of_samples(S, -1.0) - eye
    return _finalize(_tr_int(integrand))


def alpha_div(phi, psi, alpha: float) -> float:
    """Scalar Alpha divergence; dispatches to KL at the endpoints."""
    P, S = _aligned(phi, psi)
    if P.shape[1] != 1:
        raise DomainError("the Alpha family only supports scalar (m=1) densities")
    if alpha == 0:
        return kl(psi, phi)
    if alpha == 1:
        return kl(phi, psi)
    p = P[:, 0, 0].real
    s = S[:, 0, 0].real
    if p.min() <= 0 or s.min() <= 0:
        raise DomainError("Alpha divergence needs positive scalar densities")
    integrand = (
        p**alpha * s ** (1.0 - alpha) / (alpha * (alpha - 1.0))
        - p / (alpha - 1.0)
        + s / alpha
    )
    return _finalize(float(integrand.mean()))


def beta_div(phi, psi, beta: float) -> float:
    """tr int [Phi^b/(b(b-1)) - Phi Psi^{b-1}/(b-1) + Psi^b/b]."""
    if beta == 0:
        return is_dist(phi, psi)
    if beta == 1:
        return kl(phi, psi)
    P, S = _aligned(phi, psi)
    integrand = (
        power_of_samples(P, beta) / (beta * (beta - 1.0))
        - P @ power_of_samples(S, beta - 1.0) / (beta - 1.0)
        + power_of_samples(S, beta) / beta
    )
    return _finalize(_tr_int(integrand))


def _check_factor(psi_samples: np.ndarray, w_samples: np.ndarray, label: str):
    recon = w_samples @ w_samples.conj().transpose(0, 2, 1)
    err = np.linalg.norm(recon - psi_samples)
    if err > 1e-9 * (1.0 + np.linalg.norm(psi_samples)):
        raise DomainError(f"{label} is not a spectral factor of its density (residual {err:.3e})")


def _congruence(w_samples: np.ndarray, x_samples: np.ndarray) -> np.ndarray:
    return hermitize(w_samples.conj().transpose(0, 2, 1) @ x_samples @ w_samples)


def tau_div(phi, psi, tau: float, w_psi: MatrixFunction) -> float:
    """tr int [(W^-1 Phi W^-*)^t / (t(t-1)) - Phi Psi^-1/(t-1) + I/t]."""
    P, S = _aligned(phi, psi)
    if w_psi.grid != phi.grid:
        raise StructuralError("factor lives on a different grid")
    W = w_psi.samples
    _check_factor(S, W, "W_Psi")
    winv = np.linalg.inv(W)
    normalized = hermitize(winv @ P @ winv.conj().transpose(0, 2, 1))
    if tau == 0:
        return is_dist(phi, psi)
    if tau == 1:
        grid = phi.grid
        eye = np.broadcast_to(np.eye(P.shape[1], dtype=complex), normalized.shape).copy()
        return kl(SpectralDensity(grid, normalized), SpectralDensity(grid, eye))
    eye = np.eye(P.shape[1])
    integrand = (
        power_of_samples(normalized, tau) / (tau * (tau - 1.0))
        - P @ power_of_samples(S, -1.0) / (tau - 1.0)
        + eye / tau
    )
    return _finalize(_tr_int(integrand))


def b1_weighted(phi, psi, beta: float, w_q: MatrixFunction) -> float:
    """Type-1 weighted Beta: the Beta divergence of W_Q*-congruenced arguments."""
    P, S = _aligned(phi, psi)
    if w_q.grid != phi.grid:
        raise StructuralError("weight factor lives on a different grid")
    W = w_q.samples
    if np.abs(np.linalg.det(W)).min() < 1e-12:
        raise DomainError("weight factor must be invertible on the grid")
    grid = phi.grid
    cphi = SpectralDensity(grid, _congruence(W, P))
    cpsi = SpectralDensity(grid, _congruence(W, S))
    if beta == 0:
        # limit is the unweighted Itakura-Saito distance (congruence invariance)
        return is_dist(phi, psi)
    if beta == 1:
        return kl(cphi, cpsi)
    return beta_div(cphi, cpsi, beta)


def b2_weighted(phi, psi, beta: float, q: SpectralDensity) -> float:
    """Type-2 weighted Beta: tr int Q [Beta-divergence integrand]."""
    P, S = _aligned(phi, psi)
    if q.grid != phi.grid or q.samples.shape != P.shape:
        raise StructuralError("weight has wrong grid or channel count")
    if beta == 0:
        return is_weighted(phi, psi, q)
    if beta == 1:
        return kl2_weighted(phi, psi, q)
    integrand = q.samples @ (
        power_of_samples(P, beta) / (beta * (beta - 1.0))
        - P @ power_of_samples(S, beta - 1.0) / (beta - 1.0)
        + power_of_samples(S, beta) / beta
    )
    return _finalize(_tr_int(integrand))


def kl1_weighted(phi, psi, w_q: MatrixFunction) -> float:
    """KL of W_Q*-congruenced arguments (the beta -> 1 limit of type 1)."""
    P, S = _aligned(phi, psi)
    W = w_q.samples
    grid = phi.grid
    return kl(SpectralDensity(grid, _congruence(W, P)), SpectralDensity(grid, _congruence(W, S)))


def kl2_weighted(phi, psi, q: SpectralDensity) -> float:
    """tr int Q [Phi (log Phi - log Psi) - Phi + Psi]."""
    P, S = _aligned(phi, psi)
    integrand = q.samples @ (P @ (log_of_samples(P) - log_of_samples(S)) - P + S)
    return _finalize(_tr_int(integrand))


def is_weighted(phi, psi, q: SpectralDensity) -> float:
    """tr int Q [log Psi - log Phi + Phi Psi^-1 - I]."""
    P, S = _aligned(phi, psi)
    eye = np.eye(P.shape[1])
    integrand = q.samples @ (
        log_of_samples(S) - log_of_samples(P) + P @ power_of_samples(S, -1.0) - eye
    )
    return _finalize(_tr_int(integrand))


def evaluate_divergence(spec: DivergenceSpec, phi, psi) -> float:
    """Dispatch a DivergenceSpec to the matching operation."""
    fam = spec.family
    if fam == "kl":
        return kl(phi, psi)
    if fam == "is":
        return is_dist(phi, psi)
    if fam in ("alpha", "beta", "tau", "b1_weighted", "b2_weighted"):
        if spec.parameter is None:
            raise ParameterError(f"family {fam!r} needs a parameter")
        if fam == "alpha":
            return alpha_div(phi, psi, spec.parameter)
        if fam == "beta":
            return beta_div(phi, psi, spec.parameter)
        if fam == "tau":
            if spec.weight_factor is None:
                raise ParameterError("tau divergence needs the prior factor W_Psi")
            return tau_div(phi, psi, spec.parameter, spec.weight_factor)
        if fam == "b1_weighted":
            if spec.weight_factor is None:
                raise ParameterError("type-1 weighted Beta needs a weight factor W_Q")
            return b1_weighted(phi, psi, spec.parameter, spec.weight_factor)
        if spec.weight is None:
            raise ParameterError("type-2 weighted Beta needs a weight density Q")
        return b2_weighted(phi, psi, spec.parameter, spec.weight)
    if fam == "kl1_weighted":
        if spec.weight_factor is None:
            raise ParameterError("weighted KL (type 1) needs a weight factor W_Q")
        return kl1_weighted(phi, psi, spec.weight_factor)
    if spec.weight is None:
        raise ParameterError(f"family {fam!r} needs a weight density Q")
    if fam == "kl2_weighted":
        return kl2_weighted(phi, psi, spec.weight)
    return is_weighted(phi, psi, spec.weight)
