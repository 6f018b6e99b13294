# tests/test_theory.py
import math

import numpy as np
import pytest

from core.design import build_regression
from core.errors import DimensionError, UnstableSystemError
from core.estimators import estimate_lasso
from core.lti import certify_stability, generate_paper_system, markov_matrix, simulate
from core.models import LassoConfig, NoiseConfig, StabilityCertificate, System
from core.realization import build_hankel
from core.theory import (
    autocorrelation,
    build_P,
    check_row_l1,
    deterministic_bound,
    epsilon_tilde,
    eval_theorem1_bound,
    eval_theorem2_bounds,
    hankel_error_bounds,
    horizon_threshold,
    initial_state_horizon_threshold,
    initial_state_term_bound,
    lambda_lower_bound,
    ls_sample_ok,
    ls_sample_requirement,
    measurement_noise_term_bound,
    min_initial_state_horizon,
    process_noise_term_bound,
    ratio_terms,
    rsv_hypothesis,
    rsv_rhs,
    sigma_w_bar,
    tail_threshold,
)


def _cert(c_sys=2.0, rho=0.5) -> StabilityCertificate:
    return StabilityCertificate(rho=rho, c_sys=c_sys, spectral_radius=rho, phi=1.0, gamma_inf_norm=1.0)


SQRT_01 = math.sqrt(0.1)


class TestRegularizedBounds:
    def test_noise_free_E1_is_zero(self):
        b = eval_theorem2_bounds(_cert(), NoiseConfig(), 10, 50, 200, 1000)
        assert b.E1 == 0.0
        assert b.E2 > 0

    def test_reference_values(self):
        noise = NoiseConfig(sigma_u=1.0, sigma_w=SQRT_01, sigma_v=SQRT_01)
        b = eval_theorem2_bounds(_cert(2.0, 0.5), noise, 10, 50, 200, 1000)
        c3 = 8.0 / 0.5
        sw_bar = 4.0 / 0.5 * SQRT_01
        E1 = math.sqrt(c3) * math.sqrt(sw_bar + SQRT_01) * (math.log(1e5) / 1000) ** 0.25
        E2 = c3 * (math.log(500) / 1000) ** 0.25
        assert b.E1 == pytest.approx(E1, rel=1e-12)
        assert b.E2 == pytest.approx(E2, rel=1e-12)
        assert b.sigma_w_bar == pytest.approx(sw_bar)
        assert b.R == pytest.approx(32.0)
        assert b.kappa == pytest.approx(0.25)
        assert b.markov_2inf_bound == max(b.E1, b.E2)

    def test_epsilon_term(self):
        noise = NoiseConfig(sigma_u=2.0)
        b = eval_theorem2_bounds(_cert(), noise, 10, 5, 20, 100, epsilon=0.4)
        assert b.E1 == pytest.approx(math.sqrt(16.0) * 0.4 / 4.0)

    def test_monotone_in_N_and_gain(self):
        noise = NoiseConfig(sigma_w=0.3, sigma_v=0.3)
        by_N = [eval_theorem2_bounds(_cert(), noise, 10, 5, 20, N) for N in (100, 200, 400, 800)]
        assert all(a.E1 >= b.E1 and a.E2 >= b.E2 for a, b in zip(by_N, by_N[1:]))
        by_gain = [eval_theorem2_bounds(_cert(c, 0.5), noise, 10, 5, 20, 500) for c in (1.0, 1.5, 2.0, 3.0)]
        assert all(a.E1 <= b.E1 and a.E2 <= b.E2 for a, b in zip(by_gain, by_gain[1:]))

    def test_unstable_certificate(self):
        with pytest.raises(UnstableSystemError):
            eval_theorem2_bounds(_cert(rho=1.0), NoiseConfig(), 10, 5, 20, 100)

    def test_bad_eta(self):
        with pytest.raises(ValueError):
            eval_theorem2_bounds(_cert(), NoiseConfig(), 10, 5, 20, 100, eta=0.0)

    def test_with_system_adds_baseline(self, small_system, noisy):
        cert = certify_stability(small_system, 200, noisy)
        b = eval_theorem2_bounds(cert, noisy, 6, 2, 8, 400, sys=small_system)
        assert b.ls_bound_fro > 0 and b.sigma_e > 0
        assert b.ratio == pytest.approx(math.sqrt(3) * b.markov_2inf_bound / b.ls_bound_fro)
        assert b.epsilon_tilde == pytest.approx(epsilon_tilde(small_system, cert, 6))
        record = b.as_record()
        assert set(record) >= {"T0", "T0_alt", "E1", "E2", "ratio", "lambda_lower"}


class TestHorizonThresholds:
    def test_zero_epsilon_is_infinite(self):
        noise = NoiseConfig(sigma_w=0.1, sigma_v=0.1)
        assert horizon_threshold(_cert(), noise, 10, 5, 20, 100, 0.0) == math.inf

    def test_noise_free_is_zero(self):
        assert horizon_threshold(_cert(), NoiseConfig(), 10, 5, 20, 100, 0.01) == 0.0

    def test_value(self):
        noise = NoiseConfig(sigma_w=0.2, sigma_v=0.3)
        T0 = horizon_threshold(_cert(2.0, 0.5), noise, 10, 5, 20, 100, 0.01)
        expected = (math.log(math.log(100 * 20 + 10 * 5)) + math.log(4.0) + math.log(0.5) + math.log(100.0)) / 0.5
        assert T0 == pytest.approx(expected)

    def test_variant_uses_input_scale(self):
        noise = NoiseConfig(sigma_u=1.0, sigma_w=0.2, sigma_v=0.3)
        alt = horizon_threshold(_cert(2.0, 0.5), noise, 10, 5, 20, 100, 0.01, use_sigma_u=True)
        expected = (math.log(math.log(100 * 5 + 10 * 5 + 100 * 20)) + math.log(4.0) + math.log(1.2)
                    + math.log(100.0)) / 0.5
        assert alt == pytest.approx(expected)

    def test_initial_state_threshold_met_for_long_horizons(self):
        cert, noise = _cert(1.0, 0.5), NoiseConfig(sigma_w=0.1)
        T = min_initial_state_horizon(cert, noise, 5, 20, 100)
        assert T is not None
        assert T >= initial_state_horizon_threshold(cert, noise, T, 5, 20, 100)
        if T > 1:
            assert T - 1 < initial_state_horizon_threshold(cert, noise, T - 1, 5, 20, 100)


class TestLeastSquaresBaseline:
    def test_sample_requirement(self):
        assert ls_sample_requirement(2, 3, 10) == pytest.approx(6 * math.log(6) ** 2 * math.log(30) ** 2)
        assert not ls_sample_ok(10, 20, 100)
        assert ls_sample_ok(1, 2, 10 ** 6)

    def test_noise_free_long_horizon_vanishes(self, diagonal_system):
        noise = NoiseConfig(sigma_u=1.0)
        cert = certify_stability(diagonal_system, 200, noise)
        short = eval_theorem1_bound(cert, noise, diagonal_system, 5, 1000)
        long = eval_theorem1_bound(cert, noise, diagonal_system, 80, 1000)
        assert long < 1e-3 * short

    def test_spectral_not_above_frobenius(self, small_system, noisy):
        cert = certify_stability(small_system, 200, noisy)
        fro = eval_theorem1_bound(cert, noisy, small_system, 6, 500)
        spectral = eval_theorem1_bound(cert, noisy, small_system, 6, 500, spectral=True)
        assert spectral <= fro

    def test_ratio_terms(self):
        a, b = ratio_terms(10, 50, 200, 50, 1000, 0.0)
        assert a == pytest.approx((1000 * math.log(1e5) / (100 * 300)) ** 0.25)
        assert b == 0.0


class TestMarkovTail:
    def test_epsilon_tilde_decays(self, small_system):
        cert = certify_stability(small_system)
        values = [epsilon_tilde(small_system, cert, T) for T in (2, 5, 10, 20)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_tail_threshold_is_sufficient(self, small_system):
        cert = certify_stability(small_system)
        for target in (1e-1, 1e-3, 1e-6):
            T = max(1, math.ceil(tail_threshold(small_system, cert, target)))
            assert epsilon_tilde(small_system, cert, T) <= target
        assert tail_threshold(small_system, cert, 0.0) == math.inf

    def test_hankel_bounds(self):
        two_inf, fro = hankel_error_bounds(0.3, 0.1, 4, 9)
        assert two_inf == pytest.approx(0.4)
        assert fro == pytest.approx(6.0 * (0.3 + math.sqrt(2) * 0.1))

    def test_padded_hankel_error_within_bounds(self, small_system, noisy):
        T = 12
        cert = certify_stability(small_system, 200, noisy)
        data = build_regression(simulate(small_system, noisy, 150 + T - 1), T)
        G_hat = estimate_lasso(data, LassoConfig(lam=0.05))
        G = markov_matrix(small_system, T)
        markov_2inf = float(np.linalg.norm(G.G - G_hat.G, axis=1).max())

        dH = build_hankel(markov_matrix(small_system, 2 * T - 1), T, "true").H - build_hankel(G_hat, T, "padded").H
        two_inf, fro = hankel_error_bounds(markov_2inf, epsilon_tilde(small_system, cert, T), T, small_system.m)
        assert np.linalg.norm(dH, axis=1).max() <= two_inf
        assert np.linalg.norm(dH) <= fro


class TestLambdaTerms:
    def test_bounds_sum(self):
        cert, noise = _cert(), NoiseConfig(sigma_w=0.2, sigma_v=0.1)
        total = lambda_lower_bound(cert, noise, 10, 5, 20, 100)
        parts = (process_noise_term_bound(cert, noise, 10, 5, 20, 100)
                 + initial_state_term_bound(cert, 10)
                 + measurement_noise_term_bound(noise, 10, 5, 100))
        assert total == pytest.approx(parts)

    def test_noise_free_terms(self):
        cert = _cert()
        assert process_noise_term_bound(cert, NoiseConfig(), 10, 5, 20, 100) == 0.0
        assert measurement_noise_term_bound(NoiseConfig(), 10, 5, 100) == 0.0
        assert initial_state_term_bound(cert, 10, eta=1.0) == pytest.approx(4 * 0.5 ** 5)

    def test_sigma_w_bar(self):
        assert sigma_w_bar(_cert(2.0, 0.5), 0.1) == pytest.approx(0.8)


class TestRestrictedSingularValueObjects:
    def test_autocorrelation_example(self):
        np.testing.assert_allclose(autocorrelation([1, 2, 3, 4], 2, 2), [30, 11])

    def test_autocorrelation_length_check(self):
        with pytest.raises(DimensionError):
            autocorrelation([1, 2, 3], 2, 2)

    def test_autocorrelation_lag_sum(self):
        theta = np.random.default_rng(0).standard_normal(12)
        R = autocorrelation(theta, 4, 3)
        assert R[0] == pytest.approx(theta @ theta)
        assert np.abs(R[1:]).sum() <= np.abs(theta).sum() ** 2

    def test_P_single_lag(self):
        theta = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(build_P(theta, 5, 1, 3), 5.25 * np.eye(5))

    def test_P_trace_and_frobenius(self):
        theta = np.random.default_rng(1).standard_normal(8)
        N = 30
        P = build_P(theta, N, 4, 2)
        np.testing.assert_allclose(P, P.T)
        assert np.trace(P) == pytest.approx(N * theta @ theta)
        assert np.sum(P * P) <= N * (theta @ theta + np.abs(theta).sum() ** 2) ** 2

    def test_P_bounds_over_random_theta(self):
        rng = np.random.default_rng(3)
        T, p, N = 5, 3, 25
        violations = 0
        for k in range(200):
            theta = rng.standard_normal(T * p)
            if k % 2:
                theta *= rng.random(T * p) < 0.3
            l2, l1 = theta @ theta, np.abs(theta).sum() ** 2
            P = build_P(theta, N, T, p)
            assert np.trace(P) == pytest.approx(N * l2, rel=1e-12, abs=1e-12)
            violations += np.linalg.norm(P, 2) > (l2 + l1) * (1 + 1e-12)
            violations += np.sum(P * P) > N * (l2 + l1) ** 2 * (1 + 1e-12)
        assert violations == 0

    def test_P_matches_design_gram(self):
        rng = np.random.default_rng(2)
        T, p, N = 3, 2, 6
        theta = rng.standard_normal(T * p)
        blocks = theta.reshape(T, p)
        # E[(Uθ)(Uθ)ᵀ] for unit-variance inputs, by direct enumeration of shared input samples
        expected = np.zeros((N, N))
        for i in range(N):
            for j in range(N):
                for a in range(T):
                    for b in range(T):
                        if i - a == j - b:
                            expected[i, j] += blocks[a] @ blocks[b]
        np.testing.assert_allclose(build_P(theta, N, T, p), expected)

    def test_rsv_rhs(self):
        theta = np.array([3.0, -4.0])
        slack = math.sqrt(math.log(2) / 100)
        assert rsv_rhs(theta, 1.0, 1.0, 1, 2, 100) == pytest.approx(12.5 - slack * 49.0)

    def test_rsv_hypothesis(self):
        assert rsv_hypothesis(100, 1.0, 10, 5)
        assert not rsv_hypothesis(10, 1.0, 10, 5)


class TestRowChecks:
    def test_row_l1_scalar(self):
        sys = System(A=[[0.5]], B=[[1.0]], C=[[1.0]], D=[[1.0]])
        cert = certify_stability(sys)
        check = check_row_l1(markov_matrix(sys, 30), cert)
        assert check.R == pytest.approx(4.0)
        assert check.all_passed
        assert check.row_l1[0] == pytest.approx(1 + sum(0.5 ** k for k in range(29)))

    def test_row_l1_zero_system(self):
        sys = System(A=[[0.5]], B=[[0.0]], C=[[0.0]], D=[[0.0]])
        check = check_row_l1(markov_matrix(sys, 5), certify_stability(sys))
        assert check.all_passed
        np.testing.assert_allclose(check.margins, [check.R])

    @pytest.mark.parametrize("seed", range(20))
    def test_row_l1_generator_system(self, seed):
        sys = generate_paper_system(40, 10, 10, seed=seed)
        check = check_row_l1(markov_matrix(sys, 20), certify_stability(sys))
        assert check.all_passed

    def test_deterministic_threshold(self):
        check = deterministic_bound(np.zeros(4), R=32.0, kappa=0.25, f_val=0.0, lam=0.01)
        assert check.threshold == pytest.approx(450.56)
        assert check.holds
        assert check.error_sq == 0.0

    def test_deterministic_edge(self):
        row = np.array([math.sqrt(450.0), 0.0])
        assert deterministic_bound(row, 32.0, 0.25, 0.0, 0.01).holds
        assert not deterministic_bound(np.array([22.0, 0.0]), 32.0, 0.25, 0.0, 0.01).holds

    def test_deterministic_support(self):
        check = deterministic_bound(np.zeros(3), 1.0, 1.0, 0.0, 0.5, assumptions=(True, False, True),
                                    g_true=np.array([1.0, 0.2, -0.7]))
        assert check.support_size == 2
        assert not check.assumptions_hold

    def test_deterministic_rejects_bad_kappa(self):
        with pytest.raises(ValueError):
            deterministic_bound(np.zeros(2), 1.0, 0.0, 0.0, 0.1)
