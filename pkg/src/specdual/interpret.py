"""Numerical certification of the dual interpretation and the PEM link.

For every family the dual objective equals a weighted Beta divergence from the
correlogram up to a Theta-independent constant; for the scalar nu=1 solutions
the dual also evaluates an Itakura-Saito prediction-error criterion through a
cepstral minimum-phase factorization.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .divergence import (
    b1_weighted,
    b2_weighted,
    beta_div,
    is_dist,
    is_weighted,
)
from .errors import (
    DataError,
    DomainError,
    FactorizationError,
    ParameterError,
    StructuralError,
)
from .estimation import CovarianceSequence
from .freqgrid import (
    FrequencyGrid,
    MatrixFunction,
    SpectralDensity,
    hermitize,
    power_of_samples,
    scalar_density,
)
from .dualsolver import (
    ProblemSpec,
    dual_value,
    feasible,
    moment_residual,
    primal_from_dual,
)

EQ2_TOL = 1e-8


@dataclass(eq=False)
class InterpretationReport:
    family: str
    nu: int
    probes: list  # (theta, dual value, weighted divergence, difference)
    constant_spread: float
    analytic_constant: float | None = None
    analytic_mismatch: float | None = None


@dataclass(eq=False)
class ScalarFactor:
    """Scalar minimum-phase factor L with |L|^2 reproducing a given density."""

    grid: FrequencyGrid
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex).reshape(-1)
        if self.samples.shape[0] != self.grid.nf:
            raise StructuralError("factor sample count does not match the grid")
        if np.abs(self.samples).min() <= 0.0:
            raise FactorizationError("factor has a zero on the grid")


def cepstral_factor(phi: SpectralDensity) -> ScalarFactor:
    """Minimum-phase L = exp(analytic part of log(phi)/2) via the cepstrum."""
    if phi.samples.shape[1] != 1:
        raise ParameterError("cepstral factorization supports scalar densities only")
    nf = phi.grid.nf
    if nf & (nf - 1):
        raise ParameterError("cepstral factorization needs a power-of-two grid")
    vals = phi.samples[:, 0, 0].real
    if vals.min() <= 0.0:
        raise DomainError("density must be positive on the grid")
    cep = np.fft.ifft(np.log(vals))
    half = nf // 2
    analytic = np.zeros(nf, dtype=complex)
    analytic[0] = 0.5 * cep[0]
    analytic[1:half] = cep[1:half]
    analytic[half] = 0.5 * cep[half]
    L = np.exp(np.fft.fft(analytic))
    recon = np.abs(L) ** 2
    err = float(np.max(np.abs(recon - vals) / vals))
    if err > 1e-6:
        raise FactorizationError(
            f"cepstral factor reproduces the density only to {err:.3e} relative"
        )
    return ScalarFactor(phi.grid, L)


def weighted_objective(theta, spec: ProblemSpec, omega: SpectralDensity) -> float:
    """The family's weighted Beta divergence between Omega and the primal."""
    ws = spec.workspace()
    nu = spec.nu
    phi = primal_from_dual(theta, spec)
    beta = 1.0 - 1.0 / nu
    if spec.family == "tau":
        if nu == 1:
            return is_dist(omega, phi)
        w_q = MatrixFunction(
            spec.grid, np.linalg.inv(ws.w).conj().transpose(0, 2, 1)
        )
        return b1_weighted(omega, phi, beta, w_q)
    if spec.family == "beta":
        if nu == 1:
            return is_dist(omega, phi)
        return beta_div(omega, phi, beta)
    # alpha: type-2 weight Psi^(1/nu); nu=1 hits the weighted-IS limit with Q=Psi
    q = SpectralDensity(spec.grid, power_of_samples(ws.psi.samples, 1.0 / nu))
    if nu == 1:
        return is_weighted(omega, phi, q)
    return b2_weighted(omega, phi, beta, q)


def tau_analytic_constant(spec: ProblemSpec, omega: SpectralDensity) -> float:
    """Theta-independent gap J - weighted objective for the Tau family, nu > 1.

    Completing the dual objective to the weighted Beta divergence adds two
    Theta-free terms, nu^2/(1-nu) tr int (W^-1 Omega W^-*)^(1-1/nu) and
    nu tr int Omega Psi^-1; the gap is the negative of their sum.
    """
    ws = spec.workspace()
    nu = spec.nu
    if nu == 1:
        raise ParameterError("the analytic constant is defined for nu > 1")
    winv = np.linalg.inv(ws.w)
    normalized = hermitize(winv @ omega.samples @ winv.conj().transpose(0, 2, 1))
    powered = power_of_samples(normalized, 1.0 - 1.0 / nu)
    power_term = nu * nu / (nu - 1.0) * float(np.trace(powered.mean(axis=0)).real)
    cross = omega.samples @ power_of_samples(ws.psi.samples, -1.0)
    cross_term = nu * float(np.trace(cross.mean(axis=0)).real)
    return power_term - cross_term


def feasible_probes(spec: ProblemSpec, count: int, seed: int = 42) -> list:
    """Theta = 0 plus random symmetric matrices halved until comfortably feasible."""
    n = spec.filter.n
    rng = np.random.default_rng(seed)
    probes = [np.zeros((n, n))]
    base_margin = feasible(probes[0], spec).margin
    target = min(0.1, 0.5 * base_margin)
    while len(probes) < count:
        raw = rng.standard_normal((n, n))
        cand = 0.5 * (raw + raw.T)
        cand /= np.linalg.norm(cand)
        for _ in range(60):
            if feasible(cand, spec).margin >= target:
                probes.append(cand)
                break
            cand = 0.5 * cand
    return probes


def dual_constant_check(
    spec: ProblemSpec, omega: SpectralDensity, probes: list
) -> InterpretationReport:
    """Check that J(Theta) - weighted objective is Theta-independent."""
    if len(probes) < 3:
        raise ParameterError("need at least 3 probes")
    if moment_residual(omega, spec.filter, spec.sigma) > EQ2_TOL:
        raise DataError(
            "sigma estimate does not match the correlogram moments; the "
            "dual interpretation requires the correlogram condition to hold"
        )
    rows = []
    for theta in probes:
        rep = feasible(theta, spec)
        if not rep.feasible:
            raise DomainError(f"probe is infeasible (margin {rep.margin:.3e})")
        j = dual_value(theta, spec)
        w = weighted_objective(theta, spec, omega)
        rows.append((np.asarray(theta, dtype=float), j, w, j - w))
    diffs = np.array([r[3] for r in rows])
    report = InterpretationReport(
        family=spec.family,
        nu=spec.nu,
        probes=rows,
        constant_spread=float(diffs.max() - diffs.min()),
    )
    if spec.family == "tau" and spec.nu > 1:
        const = tau_analytic_constant(spec, omega)
        report.analytic_constant = const
        report.analytic_mismatch = float(
            np.max(np.abs(diffs - const)) / (1.0 + abs(const))
        )
    return report


def pem_criterion(theta, spec: ProblemSpec, omega: SpectralDensity) -> float:
    """Itakura-Saito prediction-error cost of the nu=1 scalar model at theta.

    The model's minimum-phase factor L whitens Omega into the normalized
    prediction-error density Lambda = Omega / |L|^2; the cost is the (weighted,
    for the Alpha family) Itakura-Saito distance of Lambda from white noise.
    """
    if spec.filter.m != 1:
        raise ParameterError("the PEM criterion is scalar only")
    if spec.nu != 1:
        raise ParameterError("the PEM criterion applies to nu = 1 solutions")
    phi = primal_from_dual(theta, spec)
    L = cepstral_factor(phi)
    lam = omega.samples[:, 0, 0].real / np.abs(L.samples) ** 2
    lam_density = scalar_density(spec.grid, lam)
    white = scalar_density(spec.grid, np.ones(spec.grid.nf))
    if spec.family == "alpha":
        return is_weighted(lam_density, white, spec.workspace().psi)
    return is_dist(lam_density, white)


def levinson_durbin(c: CovarianceSequence, grid: FrequencyGrid, order: int | None = None):
    """Levinson-Durbin recursion on scalar lags.

    Returns (a, sigma2, spectrum) with AR coefficients a_1..a_p in
    y(t) = sum a_k y(t-k) + e(t), innovation variance sigma2, and the spectrum
    sigma2 / |1 - sum a_k e^{-jk theta}|^2 sampled on the grid.
    """
    if c.m != 1:
        raise ParameterError("Levinson-Durbin supports scalar lags only")
    r = np.array([R[0, 0] for R in c.lags], dtype=float)
    p = c.M if order is None else order
    if p > c.M:
        raise ParameterError(f"order {p} exceeds available lags {c.M}")
    a = np.zeros(0)
    sigma2 = r[0]
    if sigma2 <= 0:
        raise DomainError("lag zero must be positive")
    for k in range(1, p + 1):
        if sigma2 <= 1e-300 * r[0]:
            raise DomainError("Toeplitz matrix of the lags is numerically singular")
        refl = (r[k] - np.dot(a, r[k - 1 : 0 : -1])) / sigma2
        a = np.concatenate([a - refl * a[::-1], [refl]])
        sigma2 *= 1.0 - refl * refl
        if sigma2 <= 0:
            raise DomainError("Toeplitz matrix of the lags is not positive definite")
    poly = np.ones(p + 1)
    poly[1:] = -a
    response = np.polyval(poly[::-1], np.exp(-1j * grid.thetas)[:, None]).reshape(-1)
    spectrum = sigma2 / np.abs(response) ** 2
    return a, float(sigma2), scalar_density(grid, spectrum)
