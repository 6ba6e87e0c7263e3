import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specdual.errors import DomainError, ParameterError
from specdual.filterbank import (
    PriorModel,
    StateSpaceFilter,
    bank_of_delays,
    evaluate,
    output_covariance,
    pole_filter,
    prior_density,
    prior_factor,
)
from specdual.freqgrid import FrequencyGrid, constant_density, scalar_density

from conftest import ar1_density


class TestStateSpaceFilter:
    def test_rejects_unstable(self):
        with pytest.raises(DomainError, match="stable"):
            StateSpaceFilter(np.diag([1.0, 0.5]), np.ones((2, 1)))

    def test_rejects_unreachable(self):
        with pytest.raises(DomainError, match="reachable"):
            StateSpaceFilter(np.zeros((2, 2)), np.array([[1.0], [1.0]]))

    def test_rejects_n_not_greater_than_m(self):
        with pytest.raises(ParameterError):
            StateSpaceFilter(np.zeros((1, 1)), np.ones((1, 1)))


class TestBankOfDelays:
    def test_structure_n2(self):
        G = bank_of_delays(2)
        assert np.array_equal(G.A, [[0.0, 0.0], [1.0, 0.0]])
        assert np.array_equal(G.B, [[1.0], [0.0]])

    def test_response_at_zero(self):
        g = FrequencyGrid(8)
        vals = evaluate(bank_of_delays(3), g).samples[0]
        assert np.allclose(vals, np.ones((3, 1)))

    def test_reachability_matrix_is_permutation(self):
        G = bank_of_delays(4)
        blocks = [G.B]
        for _ in range(3):
            blocks.append(G.A @ blocks[-1])
        ctrb = np.hstack(blocks)
        assert np.linalg.matrix_rank(ctrb) == 4
        assert np.allclose(ctrb, np.eye(4))

    def test_rejects_small_n(self):
        with pytest.raises(ParameterError):
            bank_of_delays(1)


class TestEvaluate:
    def test_single_delay_at_pi(self):
        g = FrequencyGrid(8)
        # first component of the delay bank is 1/z
        idx = g.nf // 2
        assert np.isclose(evaluate(bank_of_delays(2), g).samples[idx][0, 0], -1.0)

    def test_delay_bank_at_quarter_turn(self):
        g = FrequencyGrid(8)
        vals = evaluate(bank_of_delays(2), g).samples[2]  # theta = pi/2
        assert np.allclose(vals[:, 0], [-1j, -1.0])

    def test_pole_filter_dc_gain(self):
        g = FrequencyGrid(8)
        G = pole_filter([0.9, 0.5])
        vals = evaluate(G, g).samples[0][:, 0]
        assert np.isclose(sorted(vals.real)[-1], 10.0)  # 1/(1-0.9)

    def test_conjugate_symmetry(self):
        g = FrequencyGrid(64)
        vals = evaluate(pole_filter([0.8, 0.3]), g).samples
        for k in range(1, g.nf):
            assert np.allclose(vals[k], vals[-k].conj())


class TestPoleFilter:
    def test_real_pole_pair(self):
        G = pole_filter([0.9, -0.9])
        assert sorted(np.diag(G.A)) == [-0.9, 0.9]
        assert np.allclose(G.B, [[1.0], [1.0]])

    def test_conjugate_pair_real_realization(self):
        G = pole_filter([0.95 * np.exp(1j * np.pi / 4), 0.95 * np.exp(-1j * np.pi / 4)])
        c = 0.95 * np.cos(np.pi / 4)
        s = 0.95 * np.sin(np.pi / 4)
        assert np.allclose(G.A, [[c, s], [-s, c]])
        assert np.allclose(sorted(abs(np.linalg.eigvals(G.A))), [0.95, 0.95])

    def test_repeated_pole_uses_reachable_chain(self):
        G = pole_filter([0.0, 0.0])
        assert np.allclose(G.A, [[0.0, 0.0], [1.0, 0.0]])
        # and the naive diagonal construction is indeed rejected upstream
        with pytest.raises(DomainError, match="reachable"):
            StateSpaceFilter(np.zeros((2, 2)), np.array([[1.0], [1.0]]))

    def test_rejects_modulus_one(self):
        with pytest.raises(DomainError, match="modulus"):
            pole_filter([1.0, 0.5])

    def test_rejects_unpaired_complex(self):
        with pytest.raises(DomainError, match="conjugate"):
            pole_filter([0.5j, 0.5])


class TestOutputCovariance:
    def test_white_noise_delay_bank(self, small_grid):
        sigma = output_covariance(bank_of_delays(3), constant_density(small_grid, [[1.0]]))
        assert np.allclose(sigma, np.eye(3), atol=1e-12)

    def test_ar1_toeplitz(self, grid):
        sigma = output_covariance(bank_of_delays(2), ar1_density(grid, a=0.5))
        expect = np.array([[4.0 / 3.0, 2.0 / 3.0], [2.0 / 3.0, 4.0 / 3.0]])
        assert np.allclose(sigma, expect, atol=1e-10)

    def test_first_order_cross_gramian(self, grid):
        c = 2.0
        sigma = output_covariance(pole_filter([0.9, 0.5]), constant_density(grid, [[c]]))
        poles = [0.5, 0.9]  # construction sorts real poles
        expect = np.array([[c / (1 - p * q) for q in poles] for p in poles])
        assert np.allclose(sigma, expect, rtol=1e-10)

    @settings(deadline=None, max_examples=15)
    @given(seed=st.integers(0, 1000), a=st.floats(-0.9, 0.9))
    def test_positive_definite_for_coercive_input(self, seed, a):
        g = FrequencyGrid(256)
        rng = np.random.default_rng(seed)
        vals = 0.1 + rng.uniform(0.0, 1.0) / np.abs(1 - a * np.exp(-1j * g.thetas)) ** 2
        sigma = output_covariance(bank_of_delays(3), scalar_density(g, vals))
        assert np.linalg.eigvalsh(sigma).min() > 0

    def test_toeplitz_lag_consistency(self):
        # delay-bank covariance equals the Toeplitz matrix of the density's lags
        g = FrequencyGrid(512)
        phi = ar1_density(g, a=0.7)
        n = 4
        sigma = output_covariance(bank_of_delays(n), phi)
        vals = phi.samples[:, 0, 0].real
        lags = [float((vals * np.exp(1j * k * g.thetas)).mean().real) for k in range(n)]
        expect = np.array([[lags[abs(i - j)] for j in range(n)] for i in range(n)])
        assert np.allclose(sigma, expect, atol=1e-8)


class TestPriors:
    def test_identity_prior(self, small_grid):
        P = PriorModel.identity(2)
        psi = prior_density(P, small_grid)
        assert np.allclose(psi.samples, np.broadcast_to(np.eye(2), psi.samples.shape))

    def test_ma1_shaping_filter(self, small_grid):
        # W(z) = 1 + 0.5 z^-1  =>  Psi = 1.25 + cos(theta)
        P = PriorModel.shaping([[0.0]], [[1.0]], [[0.5]], [[1.0]])
        psi = prior_density(P, small_grid)
        assert np.allclose(
            psi.samples[:, 0, 0].real, 1.25 + np.cos(small_grid.thetas), atol=1e-12
        )

    def test_ar1_shaping_filter(self, small_grid):
        # W(z) = 1/(1 - 0.5 z^-1): A=0.5, B=1, C=0.5, D=1 gives
        # 0.5/(z-0.5) + 1 = z/(z-0.5) = 1/(1-0.5/z)
        P = PriorModel.shaping([[0.5]], [[1.0]], [[0.5]], [[1.0]])
        psi = prior_density(P, small_grid)
        assert np.allclose(
            psi.samples[:, 0, 0].real, 1.0 / (1.25 - np.cos(small_grid.thetas)), atol=1e-12
        )

    def test_minimum_phase_violation(self, small_grid):
        # W(z) = 1 - z^-1 vanishes at theta = 0
        P = PriorModel.shaping([[0.0]], [[1.0]], [[-1.0]], [[1.0]])
        with pytest.raises(DomainError, match="minimum phase"):
            prior_factor(P, small_grid)

    def test_factor_matches_density(self, small_grid):
        P = PriorModel.shaping([[0.3]], [[1.0]], [[0.4]], [[1.2]])
        w = prior_factor(P, small_grid).samples
        psi = prior_density(P, small_grid).samples
        assert np.allclose(w @ w.conj().transpose(0, 2, 1), psi, atol=1e-12)
