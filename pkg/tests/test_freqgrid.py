import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specdual.errors import DomainError, NumericalConsistencyError, ParameterError
from specdual.freqgrid import (
    FrequencyGrid,
    MatrixFunction,
    SpectralDensity,
    constant_function,
    integrate,
    matrix_log,
    matrix_power,
    scalar_density,
    trace_integral,
)

from conftest import ar1_density


def random_pd(rng, m):
    X = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return X @ X.conj().T + 0.1 * np.eye(m)


class TestGrid:
    def test_points(self):
        g = FrequencyGrid(8)
        assert g.thetas[0] == 0.0
        assert np.isclose(g.thetas[4], np.pi)
        assert np.all(np.diff(g.thetas) > 0)

    @pytest.mark.parametrize("nf", [2, 3, 7, 0, -4])
    def test_bad_sizes(self, nf):
        with pytest.raises(ParameterError):
            FrequencyGrid(nf)


class TestIntegrate:
    def test_constant_identity(self, small_grid):
        f = constant_function(small_grid, np.eye(2))
        assert np.allclose(integrate(f), np.eye(2))

    def test_single_harmonic_vanishes(self):
        g = FrequencyGrid(64)
        f = MatrixFunction(g, np.exp(1j * g.thetas).reshape(-1, 1, 1))
        assert abs(integrate(f)[0, 0]) < 1e-14

    def test_delay_bank_gram_is_identity(self):
        g = FrequencyGrid(64)
        z = np.exp(-1j * g.thetas)
        G = np.stack([z, z**2], axis=1).reshape(-1, 2, 1)
        gram = integrate(MatrixFunction(g, G @ G.conj().transpose(0, 2, 1)))
        assert np.allclose(gram, np.eye(2), atol=1e-13)

    def test_rectangle_rule_exact_for_trig_polys(self):
        g = FrequencyGrid(32)
        rng = np.random.default_rng(1)
        coeffs = {k: rng.standard_normal((2, 2)) for k in range(-10, 11)}
        samples = sum(
            coeffs[k][None] * np.exp(-1j * k * g.thetas)[:, None, None]
            for k in coeffs
        )
        got = integrate(MatrixFunction(g, samples))
        assert np.allclose(got, coeffs[0], rtol=1e-12, atol=1e-12)

    def test_commutes_with_conjugation(self, small_grid):
        rng = np.random.default_rng(2)
        samples = rng.standard_normal((small_grid.nf, 3, 3)) + 1j * rng.standard_normal(
            (small_grid.nf, 3, 3)
        )
        f = MatrixFunction(small_grid, samples)
        fstar = MatrixFunction(small_grid, samples.conj().transpose(0, 2, 1))
        assert np.allclose(integrate(fstar), integrate(f).conj().T)


class TestTraceIntegral:
    def test_identity(self, small_grid):
        assert trace_integral(constant_function(small_grid, np.eye(3))) == pytest.approx(3.0)

    def test_diagonal(self, small_grid):
        f = constant_function(small_grid, np.diag([2.0, 0.5]))
        assert trace_integral(f) == pytest.approx(2.5)

    def test_ar1_density(self, grid):
        assert trace_integral(ar1_density(grid, a=0.5)) == pytest.approx(4.0 / 3.0, rel=1e-12)

    def test_imaginary_residue_rejected(self, small_grid):
        f = constant_function(small_grid, 1j * np.eye(2))
        with pytest.raises(NumericalConsistencyError):
            trace_integral(f)


class TestMatrixPower:
    def test_identity_negative_power(self):
        assert np.allclose(matrix_power(np.eye(3), -3), np.eye(3))

    def test_diagonal_sqrt(self):
        assert np.allclose(matrix_power(np.diag([4.0, 9.0]), 0.5), np.diag([2.0, 3.0]))

    def test_square_against_direct_multiplication(self):
        H = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert np.allclose(matrix_power(H, 2), H @ H)

    def test_power_zero_and_one(self):
        H = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert np.allclose(matrix_power(H, 0), np.eye(2))
        assert np.allclose(matrix_power(H, 1), H)

    def test_non_pd_rejected(self):
        with pytest.raises(DomainError, match="eigenvalue"):
            matrix_power(np.diag([1.0, -1.0]), 0.5)

    @settings(deadline=None, max_examples=25)
    @given(
        seed=st.integers(0, 10_000),
        p=st.sampled_from([0.5, 1.0, 2.0, 1.0 / 3.0]),
        m=st.integers(1, 4),
    )
    def test_power_inverse_property(self, seed, p, m):
        H = random_pd(np.random.default_rng(seed), m)
        prod = matrix_power(H, p) @ matrix_power(H, -p)
        assert np.allclose(prod, np.eye(m), atol=1e-10)


class TestMatrixLog:
    def test_identity(self):
        assert np.allclose(matrix_log(np.eye(2)), np.zeros((2, 2)))

    def test_diagonal(self):
        got = matrix_log(np.diag([np.e, np.e**2]))
        assert np.allclose(got, np.diag([1.0, 2.0]))

    def test_exp_round_trip(self):
        H = np.array([[2.0, 1.0], [1.0, 2.0]])
        L = matrix_log(H)
        w, V = np.linalg.eigh(L)
        back = (V * np.exp(w)) @ V.conj().T
        assert np.allclose(back, H, atol=1e-10)


class TestSpectralDensity:
    def test_rejects_non_hermitian(self, small_grid):
        samples = np.broadcast_to(np.array([[1.0, 1.0], [0.0, 1.0]]), (small_grid.nf, 2, 2))
        with pytest.raises(DomainError, match="Hermitian"):
            SpectralDensity(small_grid, samples.astype(complex).copy())

    def test_rejects_indefinite(self, small_grid):
        with pytest.raises(DomainError, match="positive definite"):
            scalar_density(small_grid, -np.ones(small_grid.nf))

    def test_coercivity_witnesses(self, grid):
        phi = ar1_density(grid, a=0.5)
        vals = phi.samples[:, 0, 0].real
        assert phi.k1 == pytest.approx(vals.min())
        assert phi.k2 == pytest.approx(vals.max())
