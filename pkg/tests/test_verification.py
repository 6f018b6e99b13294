# tests/test_verification.py
import math

import numpy as np
import pytest

from core.design import build_regression
from core.lti import certify_stability, markov_matrix, simulate
from core.models import LassoConfig, NoiseConfig
from core.rng import stream
from core.verification import (
    dense_theta,
    lambda_terms,
    markov_rows_sampler,
    quadratic_form_moments,
    verify_deterministic_bound,
    verify_lambda_terms,
    verify_rsv,
    weakly_sparse_theta,
)


class TestSamplers:
    def test_weak_sparsity_profile(self):
        theta = weakly_sparse_theta(stream(0, "theta"), 40, 3)
        blocks = np.abs(theta.reshape(40, 3)).mean(axis=1)
        assert blocks[:5].mean() > blocks[-5:].mean()

    def test_markov_rows(self, small_system):
        G = markov_matrix(small_system, 4).G
        theta = markov_rows_sampler(G)(stream(1, "theta"), 4, 2)
        assert any(np.array_equal(theta, row) for row in G)

    def test_markov_rows_wrong_length(self, small_system):
        sampler = markov_rows_sampler(markov_matrix(small_system, 4).G)
        with pytest.raises(ValueError):
            sampler(stream(1, "theta"), 5, 2)


class TestRestrictedSingularValue:
    def test_zero_direction_has_zero_margin(self):
        report = verify_rsv(3, 2, 50, trials=20, theta_sampler="zero")
        assert report.success_rate == 1.0
        assert report.margin_quantiles["min"] == 0.0
        assert report.margin_quantiles["max"] == 0.0

    def test_many_samples_dense(self):
        report = verify_rsv(2, 2, 400, trials=100, theta_sampler="dense", seed=3)
        assert report.success_rate == 1.0
        assert report.hypothesis_met
        assert report.lemma == "restricted_singular_value"
        assert report.params["sampler"] == "dense"

    def test_custom_sampler(self, small_system):
        G = markov_matrix(small_system, 4).G
        report = verify_rsv(4, 2, 200, trials=30, theta_sampler=markov_rows_sampler(G))
        assert 0.0 <= report.success_rate <= 1.0
        assert report.trials == 30

    def test_unknown_sampler(self):
        with pytest.raises(ValueError, match="unknown theta sampler"):
            verify_rsv(2, 2, 10, trials=1, theta_sampler="sparse-ish")

    def test_reproducible(self):
        a = verify_rsv(3, 2, 60, trials=25, seed=5)
        b = verify_rsv(3, 2, 60, trials=25, seed=5)
        assert a.margin_quantiles == b.margin_quantiles

    @pytest.mark.slow
    def test_high_dimensional_weakly_sparse(self):
        T, p, N = 20, 10, 50
        report = verify_rsv(T, p, N, trials=500, theta_sampler="weakly_sparse", seed=1)
        assert report.success_rate >= 0.95

    @pytest.mark.slow
    def test_success_grows_with_samples(self):
        rates = [verify_rsv(10, 5, N, trials=300, theta_sampler="dense", seed=2).success_rate
                 for N in (20, 80, 320)]
        assert rates[0] <= rates[1] + 0.02 and rates[1] <= rates[2] + 0.02


class TestQuadraticForm:
    def test_moments_agree(self):
        theta = dense_theta(stream(4, "theta"), 3, 2)
        mom = quadratic_form_moments(theta, 3, 2, 50, draws=4000, seed=9)
        assert mom["mean_exact"] == pytest.approx(50 * theta @ theta)
        assert mom["mean_design"] == pytest.approx(mom["mean_exact"], rel=0.05)
        assert mom["mean_quadratic"] == pytest.approx(mom["mean_exact"], rel=0.05)
        assert mom["var_design"] == pytest.approx(mom["var_exact"], rel=0.2)
        assert mom["var_quadratic"] == pytest.approx(mom["var_exact"], rel=0.2)


class TestLambdaTerms:
    def test_noise_free_terms(self, diagonal_system):
        traj = simulate(diagonal_system, NoiseConfig(seed=2), 120)
        terms = lambda_terms(build_regression(traj, 4, diagonal_system))
        assert not terms["I"].any()
        assert not terms["III"].any()
        assert terms["II"].shape == (2,)

    def test_initial_state_term_decays_with_horizon(self, diagonal_system):
        noise = NoiseConfig(seed=2)
        values = []
        for T in (2, 10, 30):
            traj = simulate(diagonal_system, noise, 300 + T - 1)
            values.append(lambda_terms(build_regression(traj, T, diagonal_system))["II"].max())
        assert values[0] > values[1] > values[2]

    def test_needs_diagnostics(self, small_system, noisy):
        with pytest.raises(ValueError):
            lambda_terms(build_regression(simulate(small_system, noisy, 30), 3))

    def test_report(self, small_system, noisy):
        cert = certify_stability(small_system, 200, noisy)
        report = verify_lambda_terms(small_system, cert, noisy, 5, 100, trials=10, lam=0.1)
        assert report.lemma == "lambda_terms"
        assert report.trials == 10
        assert 0.0 <= report.success_rate <= 1.0
        extra = report.extra
        assert set(extra["term_success"]) == {"I", "II", "III"}
        assert extra["lambda_lower"] == pytest.approx(sum(extra["bounds"].values()))
        assert 0.0 <= extra["lambda_covers_terms"] <= 1.0
        record = report.as_record()
        assert record["params"]["T"] == 5

    def test_reproducible(self, small_system, noisy):
        cert = certify_stability(small_system, 200, noisy)
        a = verify_lambda_terms(small_system, cert, noisy, 4, 60, trials=5)
        b = verify_lambda_terms(small_system, cert, noisy, 4, 60, trials=5)
        assert a.extra["term_median"] == b.extra["term_median"]

    @pytest.mark.slow
    def test_noise_terms_bounded_and_state_term_decays(self, diagonal_system):
        noise = NoiseConfig.from_variances(0.1, 0.1, seed=5)
        cert = certify_stability(diagonal_system, 200, noise)
        horizons = [6, 8, 10, 12, 14]
        medians = []
        for T in horizons:
            report = verify_lambda_terms(diagonal_system, cert, noise, T, 200, trials=200)
            assert report.extra["term_success"]["I"] >= 0.95
            assert report.extra["term_success"]["III"] >= 0.95
            medians.append(report.extra["term_median"]["II"])
        slope = np.polyfit(horizons, np.log(medians), 1)[0]
        assert slope <= math.log(cert.rho) / 2 + 0.05


def test_deterministic_bound_report(small_system, noisy):
    cert = certify_stability(small_system, 200, noisy)
    report = verify_deterministic_bound(small_system, cert, noisy, 4, 60, LassoConfig(lam=0.2), trials=2)
    extra = report.extra
    assert extra["rows_checked"] + extra["rows_skipped"] == 2 * small_system.m
    if extra["rows_checked"]:
        assert 0.0 <= report.success_rate <= 1.0
    else:
        assert math.isnan(report.success_rate)
