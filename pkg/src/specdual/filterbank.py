"""Measurement filters G(z) = (zI - A)^{-1} B and prior shaping filters."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalConsistencyError, ParameterError, StructuralError
from .freqgrid import (
    FrequencyGrid,
    MatrixFunction,
    SpectralDensity,
    constant_density,
    constant_function,
    hermitize,
    integrate,
)

COND_LIMIT = 1e12
MINPHASE_DET_FLOOR = 1e-8


def _controllability_rank(A: np.ndarray, B: np.ndarray) -> int:
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return int(np.linalg.matrix_rank(np.hstack(blocks)))


@dataclass(eq=False)
class StateSpaceFilter:
    """Strictly stable, reachable pair (A, B) with n states and m inputs."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.asarray(self.B, dtype=float)
        if self.B.ndim == 1:
            self.B = self.B.reshape(-1, 1)
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise StructuralError("A must be square")
        if self.B.shape[0] != n:
            raise StructuralError("B must have as many rows as A")
        m = self.B.shape[1]
        if n <= m:
            raise ParameterError(f"need more states than channels, got n={n}, m={m}")
        radius = max(abs(np.linalg.eigvals(self.A)), default=0.0)
        if radius >= 1.0:
            raise DomainError(f"A must be strictly stable; spectral radius {radius:.6f}")
        if _controllability_rank(self.A, self.B) != n:
            raise DomainError("(A, B) is not reachable")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


def bank_of_delays(n: int) -> StateSpaceFilter:
    """G(z) = [z^-1, ..., z^-n]^T as a shift chain fed on its first state."""
    if n < 2:
        raise ParameterError(f"bank of delays needs n >= 2, got {n}")
    A = np.diag(np.ones(n - 1), -1)
    B = np.zeros((n, 1))
    B[0, 0] = 1.0
    return StateSpaceFilter(A, B)


def _group_poles(poles):
    """Split conjugation-closed pole list into real poles and Im>0 pairs,
    each with multiplicity."""
    tol = 1e-12
    poles = [complex(p) for p in poles]
    for p in poles:
        if abs(p) >= 1.0:
            raise DomainError(f"pole {p} has modulus >= 1")
    reals = sorted(p.real for p in poles if abs(p.imag) <= tol)
    upper = sorted((p for p in poles if p.imag > tol), key=lambda p: (p.real, p.imag))
    lower = sorted((p for p in poles if p.imag < -tol), key=lambda p: (p.real, -p.imag))
    if len(upper) != len(lower) or any(
        abs(u - l.conjugate()) > 1e-9 for u, l in zip(upper, lower)
    ):
        raise DomainError("complex poles must come in conjugate pairs")

    def runs(values, close):
        out = []
        for v in values:
            if out and close(out[-1][0], v):
                out[-1][1] += 1
            else:
                out.append([v, 1])
        return out

    real_groups = runs(reals, lambda a, b: abs(a - b) <= 1e-9)
    pair_groups = runs(upper, lambda a, b: abs(a - b) <= 1e-9)
    return real_groups, pair_groups


def pole_filter(poles, m: int = 1) -> StateSpaceFilter:
    """Real modal realization with the given poles, each repeated per channel.

    Repeated poles are realized as Jordan-style chains so the pair stays
    reachable; a naive diagonal realization would not be.
    """
    real_groups, pair_groups = _group_poles(poles)
    Im = np.eye(m)
    a_blocks, b_blocks = [], []
    for p, mult in real_groups:
        size = mult * m
        Ab = p * np.eye(size)
        for j in range(mult - 1):
            Ab[(j + 1) * m : (j + 2) * m, j * m : (j + 1) * m] = Im
        Bb = np.zeros((size, m))
        Bb[:m, :] = Im
        a_blocks.append(Ab)
        b_blocks.append(Bb)
    for p, mult in pair_groups:
        r, phi = abs(p), np.angle(p)
        R = r * np.array([[np.cos(phi), np.sin(phi)], [-np.sin(phi), np.cos(phi)]])
        core = np.kron(R, Im)
        size = 2 * m * mult
        Ab = np.zeros((size, size))
        for j in range(mult):
            Ab[j * 2 * m : (j + 1) * 2 * m, j * 2 * m : (j + 1) * 2 * m] = core
            if j:
                Ab[j * 2 * m : (j + 1) * 2 * m, (j - 1) * 2 * m : j * 2 * m] = np.eye(2 * m)
        Bb = np.zeros((size, m))
        Bb[:m, :] = Im
        a_blocks.append(Ab)
        b_blocks.append(Bb)
    if not a_blocks:
        raise ParameterError("pole list is empty")
    n = sum(b.shape[0] for b in a_blocks)
    A = np.zeros((n, n))
    B = np.zeros((n, m))
    at = 0
    for Ab, Bb in zip(a_blocks, b_blocks):
        k = Ab.shape[0]
        A[at : at + k, at : at + k] = Ab
        B[at : at + k, :] = Bb
        at += k
    if n <= m:
        raise ParameterError(f"pole filter needs n > m, got n={n}, m={m}")
    return StateSpaceFilter(A, B)


def _resolvent_times(A: np.ndarray, B: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    """(e^{j theta} I - A)^{-1} B at every grid point, shape (nf, n, cols)."""
    n = A.shape[0]
    z = np.exp(1j * grid.thetas)
    M = z[:, None, None] * np.eye(n) - A
    cond = np.linalg.cond(M)
    if cond.max() > COND_LIMIT:
        raise NumericalConsistencyError(
            f"filter nearly unstable on grid: condition number {cond.max():.3e}"
        )
    return np.linalg.solve(M, np.broadcast_to(B.astype(complex), (grid.nf, *B.shape)))


def evaluate(G: StateSpaceFilter, grid: FrequencyGrid) -> MatrixFunction:
    """Frequency response of G on the grid as an (nf, n, m) MatrixFunction."""
    return MatrixFunction(grid, _resolvent_times(G.A, G.B, grid))


def output_covariance_samples(g_samples: np.ndarray, phi_samples: np.ndarray) -> np.ndarray:
    """Real symmetric integral of G Phi G*; residues are checked by callers."""
    pointwise = g_samples @ phi_samples @ g_samples.conj().transpose(0, 2, 1)
    sigma = pointwise.mean(axis=0)
    return 0.5 * (sigma + sigma.conj().T).real


def output_covariance(G: StateSpaceFilter, phi: SpectralDensity) -> np.ndarray:
    """Sigma = integral of G Phi G*, returned real symmetric."""
    gs = evaluate(G, phi.grid).samples
    pointwise = gs @ phi.samples @ gs.conj().transpose(0, 2, 1)
    raw = pointwise.mean(axis=0)
    sym = 0.5 * (raw + raw.conj().T)
    residue = np.linalg.norm(raw - sym) + np.linalg.norm(sym.imag)
    if residue > 1e-9 * (1.0 + np.linalg.norm(sym.real)):
        raise NumericalConsistencyError(
            f"output covariance has imaginary/asymmetric residue {residue:.3e}"
        )
    return sym.real


@dataclass(eq=False)
class PriorModel:
    """Prior spectral density given through its shaping filter W_Psi.

    kind='identity' means Psi = I. kind='shaping_filter' supplies a stable,
    minimum-phase state-space realization (A, B, C, D) of W_Psi with D square
    invertible; Psi = W W* on the grid.
    """

    kind: str
    m: int
    A: np.ndarray | None = None
    B: np.ndarray | None = None
    C: np.ndarray | None = None
    D: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "shaping_filter"):
            raise ParameterError(f"unknown prior kind {self.kind!r}")
        if self.m < 1:
            raise ParameterError("channel count must be positive")
        if self.kind == "shaping_filter":
            if any(x is None for x in (self.A, self.B, self.C, self.D)):
                raise ParameterError("shaping filter prior needs A, B, C, D")
            self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
            self.B = np.asarray(self.B, dtype=float).reshape(self.A.shape[0], -1)
            self.C = np.asarray(self.C, dtype=float).reshape(-1, self.A.shape[0])
            self.D = np.atleast_2d(np.asarray(self.D, dtype=float))
            if self.D.shape != (self.m, self.m):
                raise StructuralError(f"D must be {self.m}x{self.m}")
            if abs(np.linalg.det(self.D)) < 1e-12:
                raise DomainError("D must be invertible")
            radius = max(abs(np.linalg.eigvals(self.A)), default=0.0)
            if radius >= 1.0:
                raise DomainError(
                    f"shaping filter must be stable; spectral radius {radius:.6f}"
                )

    @classmethod
    def identity(cls, m: int = 1) -> "PriorModel":
        return cls(kind="identity", m=m)

    @classmethod
    def shaping(cls, A, B, C, D) -> "PriorModel":
        D = np.atleast_2d(np.asarray(D, dtype=float))
        return cls(kind="shaping_filter", m=D.shape[0], A=A, B=B, C=C, D=D)


def prior_factor(P: PriorModel, grid: FrequencyGrid) -> MatrixFunction:
    """W_Psi on the grid; raises if it loses minimum phase numerically."""
    if P.kind == "identity":
        return constant_function(grid, np.eye(P.m))
    resolvent = _resolvent_times(P.A, P.B, grid)
    samples = np.broadcast_to(P.C.astype(complex), (grid.nf, *P.C.shape)) @ resolvent
    samples = samples + P.D
    dets = np.abs(np.linalg.det(samples))
    if dets.min() < MINPHASE_DET_FLOOR:
        worst = int(np.argmin(dets))
        raise DomainError(
            f"shaping filter loses minimum phase: |det W| = {dets.min():.3e} "
            f"at theta={grid.thetas[worst]:.6f}"
        )
    return MatrixFunction(grid, samples)


def prior_density(P: PriorModel, grid: FrequencyGrid) -> SpectralDensity:
    """Psi = W_Psi W_Psi* on the grid."""
    if P.kind == "identity":
        return constant_density(grid, np.eye(P.m))
    w = prior_factor(P, grid).samples
    return SpectralDensity(grid, hermitize(w @ w.conj().transpose(0, 2, 1)))
