"""Dual problems of the Alpha/Beta/Tau estimation families and their solver.

The dual objective J(Theta), its gradient Sigma_hat - int G Phi_Theta G*, the
family-specific feasibility certificates, and a feasible-start descent with
Armijo backtracking (accelerated by limited-memory BFGS; monotone decrease and
strict feasibility are preserved).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError, StructuralError
from .estimation import CovarianceEstimate
from .filterbank import (
    PriorModel,
    StateSpaceFilter,
    evaluate,
    output_covariance_samples,
    prior_density,
    prior_factor,
)
from .freqgrid import (
    FrequencyGrid,
    SpectralDensity,
    hermitize,
    power_of_samples,
)

FAMILIES = ("alpha", "beta", "tau")
FEASIBILITY_FLOOR = 1e-12


@dataclass(eq=False)
class DualVariable:
    """Real symmetric n x n matrix."""

    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        n = self.theta.shape[0]
        if self.theta.shape != (n, n):
            raise StructuralError("theta must be square")
        defect = np.linalg.norm(self.theta - self.theta.T)
        if defect > 1e-12 * (1.0 + np.linalg.norm(self.theta)):
            raise StructuralError(f"theta must be symmetric (defect {defect:.3e})")
        self.theta = 0.5 * (self.theta + self.theta.T)

    @property
    def n(self) -> int:
        return self.theta.shape[0]


@dataclass
class SolverOptions:
    grad_tol: float = 1e-7
    moment_tol: float = 1e-6
    max_iters: int = 500
    armijo_c: float = 1e-4
    backtrack_ratio: float = 0.5
    lbfgs_memory: int = 20

    def __post_init__(self):
        if min(self.grad_tol, self.moment_tol, self.armijo_c) <= 0:
            raise ParameterError("tolerances must be positive")
        if self.max_iters <= 0:
            raise ParameterError("max_iters must be positive")
        if not 0.0 < self.backtrack_ratio < 1.0:
            raise ParameterError("backtrack_ratio must lie in (0, 1)")


@dataclass(eq=False)
class FeasibilityReport:
    feasible: bool
    margin: float
    worst_theta: float


@dataclass(eq=False)
class Solution:
    theta_hat: DualVariable
    phi_star: SpectralDensity
    dual_value: float
    moment_residual: float
    iterations: int
    converged: bool
    grad_norm: float


@dataclass(eq=False)
class ProblemSpec:
    """One fully specified spectrum approximation problem."""

    family: str
    nu: int
    filter: StateSpaceFilter
    prior: PriorModel
    sigma: CovarianceEstimate
    grid: FrequencyGrid
    subspace: list | None = None
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if not isinstance(self.nu, (int, np.integer)) or self.nu < 1:
            raise ParameterError(f"nu must be a positive integer, got {self.nu!r}")
        self.nu = int(self.nu)
        if self.family == "alpha" and self.filter.m != 1:
            raise ParameterError("the Alpha family is scalar only (m = 1)")
        if self.prior.m != self.filter.m:
            raise StructuralError("prior and filter disagree on the channel count")
        if self.sigma.n != self.filter.n:
            raise StructuralError("sigma size does not match the filter state count")
        if self.subspace is not None:
            basis = [np.atleast_2d(np.asarray(V, dtype=float)) for V in self.subspace]
            n = self.filter.n
            for V in basis:
                if V.shape != (n, n):
                    raise StructuralError("subspace basis matrices must be n x n")
                if np.linalg.norm(V - V.T) > 1e-10 * (1.0 + np.linalg.norm(V)):
                    raise StructuralError("subspace basis matrices must be symmetric")
            flat = np.stack([0.5 * (V + V.T).ravel() for V in basis])
            if np.linalg.matrix_rank(flat) != len(basis):
                raise StructuralError("subspace basis matrices must be linearly independent")
            self.subspace = [0.5 * (V + V.T) for V in basis]
        self._ws = None

    def workspace(self) -> "_Workspace":
        if self._ws is None:
            self._ws = _Workspace(self)
        return self._ws


class _Workspace:
    """Grid evaluations shared by every J / gradient / primal call on a spec."""

    def __init__(self, spec: ProblemSpec):
        self.spec = spec
        self.g = evaluate(spec.filter, spec.grid).samples  # (nf, n, m)
        self.gh = self.g.conj().transpose(0, 2, 1)  # (nf, m, n)
        self.psi = prior_density(spec.prior, spec.grid)
        self.w = prior_factor(spec.prior, spec.grid).samples
        self.wh = self.w.conj().transpose(0, 2, 1)
        self.m = spec.filter.m
        nu = spec.nu
        if spec.family == "beta" or (spec.family == "tau" and nu == 1):
            # at nu = 1 the Tau solution coincides with the Beta one, and the
            # Beta form (Psi^-1 + q)^-1 avoids the extra W congruences
            self.psi_neg_nu = power_of_samples(self.psi.samples, -1.0 / nu)
        if spec.family == "alpha":
            self.psi_scalar = self.psi.samples[:, 0, 0].real
        if spec.subspace is not None:
            flat = np.stack([V.ravel() for V in spec.subspace]).T  # (n*n, k)
            q, _ = np.linalg.qr(flat)
            self.proj = q @ q.T
        else:
            self.proj = None

    def quadratic(self, theta: np.ndarray) -> np.ndarray:
        """G* Theta G on the grid, shape (nf, m, m)."""
        return hermitize(self.gh @ theta @ self.g)

    def project(self, mat: np.ndarray) -> np.ndarray:
        if self.proj is None:
            return mat
        return (self.proj @ mat.ravel()).reshape(mat.shape)


def _as_theta(theta) -> np.ndarray:
    if isinstance(theta, DualVariable):
        return theta.theta
    return DualVariable(theta).theta


def _certificate(theta: np.ndarray, spec: ProblemSpec) -> np.ndarray:
    """Family positivity certificate on the grid; returns min-eigenvalue track."""
    ws = spec.workspace()
    nu = spec.nu
    q = ws.quadratic(theta)
    if spec.family == "alpha":
        return 1.0 + q[:, 0, 0].real / nu
    if spec.family == "beta":
        cert = ws.psi_neg_nu + q / nu
    else:
        cert = np.eye(ws.m) + hermitize(ws.wh @ q @ ws.w) / nu
    if ws.m == 1:
        return cert[:, 0, 0].real
    return np.linalg.eigvalsh(cert).min(axis=1)


def feasible(theta, spec: ProblemSpec) -> FeasibilityReport:
    """Evaluate the family's positivity certificate at every grid point."""
    theta = _as_theta(theta)
    track = _certificate(theta, spec)
    worst = int(np.argmin(track))
    margin = float(track[worst])
    return FeasibilityReport(margin > 0.0, margin, float(spec.grid.thetas[worst]))


def _require_feasible(theta: np.ndarray, spec: ProblemSpec) -> FeasibilityReport:
    rep = feasible(theta, spec)
    if not rep.feasible:
        raise DomainError(
            f"theta is infeasible for the {spec.family} dual "
            f"(margin {rep.margin:.3e} at theta={rep.worst_theta:.6f})"
        )
    return rep


def primal_from_dual(theta, spec: ProblemSpec) -> SpectralDensity:
    """The family's solution form evaluated at theta."""
    theta = _as_theta(theta)
    _require_feasible(theta, spec)
    ws = spec.workspace()
    nu = spec.nu
    q = ws.quadratic(theta)
    if spec.family == "alpha":
        base = 1.0 + q[:, 0, 0].real / nu
        samples = (ws.psi_scalar / base**nu).reshape(-1, 1, 1).astype(complex)
    elif spec.family == "beta" or nu == 1:
        samples = power_of_samples(ws.psi_neg_nu + q / nu, -float(nu))
    else:
        inner = np.eye(ws.m) + hermitize(ws.wh @ q @ ws.w) / nu
        samples = hermitize(ws.w @ power_of_samples(inner, -float(nu)) @ ws.wh)
    return SpectralDensity(spec.grid, samples)


def dual_value(theta, spec: ProblemSpec) -> float:
    """J(Theta) for the spec's family and nu."""
    theta = _as_theta(theta)
    _require_feasible(theta, spec)
    ws = spec.workspace()
    nu = spec.nu
    q = ws.quadratic(theta)
    linear = float(np.sum(spec.sigma.sigma * theta))
    if spec.family == "alpha":
        base = 1.0 + q[:, 0, 0].real / nu
        if nu == 1:
            integral = -float((ws.psi_scalar * np.log(base)).mean())
        else:
            integral = nu / (nu - 1.0) * float((ws.psi_scalar * base ** (1 - nu)).mean())
        return integral + linear
    if nu == 1:
        # Beta and Tau coincide: tr int log(Psi^-1 + G* Theta G)^-1
        inner = power_of_samples(ws.psi.samples, -1.0) + q
        if ws.m == 1:
            vals = inner[:, 0, 0].real
            if vals.min() <= 0:
                raise DomainError("log-det certificate lost positivity")
            integral = -float(np.log(vals).mean())
        else:
            sign, logdet = np.linalg.slogdet(inner)
            if np.any(sign.real <= 0):
                raise DomainError("log-det certificate lost positivity")
            integral = -float(logdet.real.mean())
        return integral + linear
    if spec.family == "beta":
        inner = ws.psi_neg_nu + q / nu
    else:
        inner = np.eye(ws.m) + hermitize(ws.wh @ q @ ws.w) / nu
    if ws.m == 1:
        eigs = inner[:, 0, 0].real
    else:
        eigs = np.linalg.eigvalsh(inner)
    if eigs.min() <= 0:
        raise DomainError("dual certificate lost positivity")
    integral = nu / (nu - 1.0) * float((eigs ** (1 - nu)).sum() / spec.grid.nf)
    return integral + linear


def dual_gradient(theta, spec: ProblemSpec) -> np.ndarray:
    """grad J = Sigma_hat - int G Phi_Theta G*, projected onto the subspace."""
    theta = _as_theta(theta)
    phi = primal_from_dual(theta, spec)
    ws = spec.workspace()
    grad = spec.sigma.sigma - output_covariance_samples(ws.g, phi.samples)
    grad = 0.5 * (grad + grad.T)
    return ws.project(grad)


def moment_residual(phi: SpectralDensity, G: StateSpaceFilter, sigma) -> float:
    """Relative Frobenius mismatch of the primal moment constraint."""
    if isinstance(sigma, CovarianceEstimate):
        sigma = sigma.sigma
    gs = evaluate(G, phi.grid).samples
    out = output_covariance_samples(gs, phi.samples)
    return float(np.linalg.norm(out - sigma) / np.linalg.norm(sigma))


def _lbfgs_direction(grad, s_hist, y_hist):
    q = grad.ravel().copy()
    alphas = []
    rhos = [1.0 / np.dot(y.ravel(), s.ravel()) for s, y in zip(s_hist, y_hist)]
    for (s, y), rho in zip(reversed(list(zip(s_hist, y_hist))), reversed(rhos)):
        a = rho * np.dot(s.ravel(), q)
        alphas.append(a)
        q -= a * y.ravel()
    if y_hist:
        y = y_hist[-1].ravel()
        s = s_hist[-1].ravel()
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y), rho, a in zip(zip(s_hist, y_hist), rhos, reversed(alphas)):
        b = rho * np.dot(y.ravel(), q)
        q += (a - b) * s.ravel()
    return -q.reshape(grad.shape)


def solve(spec: ProblemSpec) -> Solution:
    """Feasible-start descent from Theta = 0 down to gradient-norm tolerance."""
    if not spec.sigma.positive_definite:
        raise DomainError(
            "sigma estimate is singular (PSD but not PD); the dual problem "
            "requires a positive definite moment matrix"
        )
    opts = spec.options
    ws = spec.workspace()
    n = spec.filter.n
    theta = np.zeros((n, n))
    value = dual_value(theta, spec)
    grad = dual_gradient(theta, spec)
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    iters = 0
    gn = np.linalg.norm(grad)
    # gradient tolerance scales with sigma so it stays commensurate with the
    # relative moment tolerance (the gradient IS the moment mismatch)
    gtol = opts.grad_tol * max(1.0, float(np.linalg.norm(spec.sigma.sigma)))
    while gn > gtol and iters < opts.max_iters:
        direction = _lbfgs_direction(grad, s_hist, y_hist) if s_hist else -grad
        direction = ws.project(direction)
        direction = 0.5 * (direction + direction.T)
        slope = float(np.sum(grad * direction))
        if slope >= -1e-14 * gn * max(np.linalg.norm(direction), 1e-300):
            direction = -grad
            slope = -gn * gn
        step = 1.0 if s_hist else min(1.0, 1.0 / gn)
        accepted = False
        while step > 1e-18:
            cand = theta + step * direction
            track_min = float(np.min(_certificate(cand, spec)))
            if track_min >= FEASIBILITY_FLOOR:
                cand_value = dual_value(cand, spec)
                if cand_value <= value + opts.armijo_c * step * slope:
                    accepted = True
                    break
            step *= opts.backtrack_ratio
        if not accepted:
            break
        new_grad = dual_gradient(cand, spec)
        s = cand - theta
        y = new_grad - grad
        if float(np.sum(s * y)) > 1e-16:
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > opts.lbfgs_memory:
                s_hist.pop(0)
                y_hist.pop(0)
        theta, value, grad = cand, cand_value, new_grad
        gn = np.linalg.norm(grad)
        iters += 1
    phi = primal_from_dual(theta, spec)
    residual = moment_residual(phi, spec.filter, spec.sigma)
    converged = bool(gn <= gtol and residual <= opts.moment_tol)
    return Solution(
        theta_hat=DualVariable(theta),
        phi_star=phi,
        dual_value=value,
        moment_residual=residual,
        iterations=iters,
        converged=converged,
        grad_norm=float(gn),
    )
