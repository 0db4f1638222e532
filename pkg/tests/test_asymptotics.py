"""Асимптотика: Σ_m, якобианы, Σ*, предельные законы"""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from app.exceptions import DomainError, SampleTooSmallError, SingularCorrelationError
from app.modules.asymptotics import (
    MOMENT_INDEX,
    CovMatrix2,
    LimitKind,
    LimitLaw,
    bivariate_normal_moments,
    limit_law_cdf,
    limit_law_pdf,
    limit_quantile,
    matrix_A,
    matrix_B,
    max_abs_cdf,
    max_abs_cdf_quadrature,
    max_abs_pdf,
    max_pair_cdf,
    max_pair_cdf_quadrature,
    max_pair_pdf,
    moment_cov_from_moments,
    moment_cov_matrix,
    moment_map_g,
    moment_map_h,
    moment_point,
    sample_moments,
    select_limit_law,
    sigma_star,
    sigma_star_11_scalar,
    sigma_star_bivariate_normal,
    sigma_star_from_moments,
    sigma_star_independence,
)
from app.modules.estimators import Sample, lancaster_linear, lancaster_rank, standardize
from app.modules.samplers import parse_distribution, sample, stream_rng
from app.modules.special_functions import normal_cdf, normal_quantile

RHOS = [0.0, 0.25, -0.25, 0.5, -0.5, 0.95, -0.95]


def _jacobian(f, point, h=1e-6):
    columns = []
    for i in range(len(point)):
        up, down = point.copy(), point.copy()
        up[i] += h
        down[i] -= h
        columns.append((f(up) - f(down)) / (2 * h))
    return np.column_stack(columns)


def _quadrant_probability(z, law):
    """P(U <= z, V <= z) двумерной квадратурой плотности"""
    s1, s2, tau = law.sigma1, law.sigma2, law.tau
    cov = np.array([[s1 * s1, tau * s1 * s2], [tau * s1 * s2, s2 * s2]])
    density = stats.multivariate_normal(mean=[0.0, 0.0], cov=cov).pdf
    value, _ = integrate.dblquad(lambda v, u: density([u, v]), -12 * s1, z, -12 * s2, z,
                                 epsabs=1e-10, epsrel=1e-10)
    return value


class TestMoments:

    @pytest.mark.parametrize("rho", RHOS)
    def test_bivariate_normal_moments(self, rho):
        m = bivariate_normal_moments(rho)
        assert m[(3, 1)] == pytest.approx(3 * rho, abs=1e-12)
        assert m[(2, 2)] == pytest.approx(2 * rho ** 2 + 1, abs=1e-12)
        assert m[(4, 4)] == pytest.approx(3 * (8 * rho ** 4 + 24 * rho ** 2 + 3), abs=1e-9)
        assert m[(8, 0)] == pytest.approx(105.0)

    @pytest.mark.parametrize("rho", [0.0, 0.5, -0.95])
    def test_normal_moment_covariance_entries(self, rho):
        sigma = moment_cov_from_moments(bivariate_normal_moments(rho))
        index = {key: i for i, key in enumerate(MOMENT_INDEX)}
        assert sigma[index[(1, 0)], index[(1, 0)]] == pytest.approx(1.0)
        assert sigma[index[(1, 1)], index[(1, 1)]] == pytest.approx(rho ** 2 + 1)
        assert sigma[index[(4, 0)], index[(4, 0)]] == pytest.approx(96.0)
        assert sigma[index[(2, 2)], index[(2, 2)]] == pytest.approx(20 * rho ** 4 + 68 * rho ** 2 + 8)
        np.testing.assert_allclose(sigma, sigma.T)

    def test_empirical_covariance_matches_numpy(self, skewed_sample):
        x, y = standardize(skewed_sample.xs), standardize(skewed_sample.ys)
        monomials = np.vstack([x ** k * y ** l for k, l in MOMENT_INDEX])
        expected = np.cov(monomials, bias=True)
        np.testing.assert_allclose(moment_cov_matrix(skewed_sample), expected, atol=1e-8, rtol=1e-8)

    def test_moment_covariance_needs_twelve_points(self, rng):
        with pytest.raises(SampleTooSmallError):
            moment_cov_matrix(Sample(rng.standard_normal(11), rng.standard_normal(11)))

    def test_non_standardized_moments_rejected(self):
        m = dict(bivariate_normal_moments(0.3).e)
        m[(2, 0)] = 2.0
        with pytest.raises(DomainError):
            type(bivariate_normal_moments(0.3))(m)


class TestDeltaMethod:

    def test_matrix_A_is_jacobian_of_g(self, skewed_sample):
        m = sample_moments(skewed_sample)
        point = moment_point(m)
        np.testing.assert_allclose(_jacobian(moment_map_g, point), matrix_A(m), atol=1e-5)

    def test_matrix_B_is_jacobian_of_h(self, skewed_sample):
        m = sample_moments(skewed_sample)
        inner = moment_map_g(moment_point(m))
        rho1, rho2 = moment_map_h(inner)
        assert rho1 == pytest.approx(m.rho1, abs=1e-12)
        assert rho2 == pytest.approx(m.rho2, abs=1e-12)
        np.testing.assert_allclose(_jacobian(moment_map_h, inner), matrix_B(m, rho1, rho2), atol=1e-6)

    @pytest.mark.parametrize("rho", RHOS)
    def test_closed_form_under_normality(self, rho):
        computed = sigma_star_from_moments(bivariate_normal_moments(rho))
        expected = sigma_star_bivariate_normal(rho)
        assert computed.s11 == pytest.approx(expected.s11, abs=1e-9)
        assert computed.s12 == pytest.approx(expected.s12, abs=1e-9)
        assert computed.s22 == pytest.approx(expected.s22, abs=1e-9)

    def test_identity_at_independence(self):
        np.testing.assert_allclose(sigma_star_bivariate_normal(0.0).as_array(), np.eye(2))

    def test_scalar_first_entry(self, skewed_sample):
        m = sample_moments(skewed_sample)
        assert sigma_star(skewed_sample).s11 == pytest.approx(sigma_star_11_scalar(m), rel=1e-9)

    def test_plug_in_is_positive_semidefinite(self, skewed_sample):
        assert np.all(sigma_star(skewed_sample).eigenvalues() >= -1e-10)

    def test_independence_tau_vanishes_for_symmetric_margins(self, rng):
        s = Sample(rng.standard_normal(50_000), rng.standard_normal(50_000))
        cov = sigma_star_independence(s)
        assert (cov.s11, cov.s22) == (1.0, 1.0)
        assert abs(cov.s12) < 0.01


class TestLimitLaws:

    def test_standard_max_abs_identity(self):
        law = LimitLaw(LimitKind.MAX_ABS_PAIR)
        for z in np.linspace(0.0, 6.0, 121):
            assert max_abs_cdf(z, law) == pytest.approx((2 * normal_cdf(z) - 1) ** 2, abs=1e-12)

    def test_standard_max_abs_quantile(self):
        law = LimitLaw(LimitKind.MAX_ABS_PAIR)
        expected = normal_quantile((1 + math.sqrt(0.95)) / 2)
        assert limit_quantile(0.95, law) == pytest.approx(expected, abs=1e-8)
        assert expected == pytest.approx(2.2365, abs=1e-4)

    @pytest.mark.parametrize("sigma1", [0.5, 1.0, 1.7])
    @pytest.mark.parametrize("sigma2", [0.3, 1.0, 2.2])
    @pytest.mark.parametrize("tau", [-0.8, -0.3, 0.0, 0.45, 0.9])
    def test_max_pair_mixture_against_quadrature(self, sigma1, sigma2, tau):
        law = LimitLaw(LimitKind.MAX_PAIR, sigma1, sigma2, tau)
        for z in (-1.5, -0.2, 0.0, 0.7, 2.5):
            assert max_pair_cdf(z, law) == pytest.approx(max_pair_cdf_quadrature(z, law), abs=1e-8)

    @pytest.mark.parametrize("sigma1,sigma2,tau", [(1.0, 1.0, 0.5), (0.6, 1.4, -0.7), (2.0, 0.5, 0.2)])
    def test_max_pair_against_bivariate_quadrature(self, sigma1, sigma2, tau):
        law = LimitLaw(LimitKind.MAX_PAIR, sigma1, sigma2, tau)
        for z in (-0.5, 0.8):
            assert max_pair_cdf(z, law) == pytest.approx(_quadrant_probability(z, law), abs=1e-6)

    def test_negative_pair_flips_tau(self):
        negative = LimitLaw(LimitKind.MAX_NEG_PAIR, 1.2, 0.8, 0.4)
        positive = LimitLaw(LimitKind.MAX_PAIR, 1.2, 0.8, -0.4)
        for z in (-1.0, 0.0, 1.3):
            assert max_pair_cdf(z, negative) == pytest.approx(max_pair_cdf(z, positive), abs=1e-15)

    @pytest.mark.parametrize("kind", [LimitKind.MAX_PAIR, LimitKind.MAX_NEG_PAIR])
    def test_max_pair_density_integrates_to_cdf(self, kind):
        law = LimitLaw(kind, 0.8, 1.3, 0.35)
        for z in (-1.0, 0.5, 2.0):
            value, _ = integrate.quad(lambda t: max_pair_pdf(t, law), -15, z, epsabs=1e-11)
            assert value == pytest.approx(max_pair_cdf(z, law), abs=1e-8)

    @pytest.mark.parametrize("sigma1,sigma2,tau", [(1.0, 1.0, 0.3), (0.7, 1.5, -0.6), (1.9, 0.4, 0.85)])
    def test_max_abs_against_quadrature(self, sigma1, sigma2, tau):
        law = LimitLaw(LimitKind.MAX_ABS_PAIR, sigma1, sigma2, tau)
        for z in (0.1, 0.9, 2.4, 5.0):
            assert max_abs_cdf(z, law) == pytest.approx(max_abs_cdf_quadrature(z, law), abs=1e-8)
            value, _ = integrate.quad(lambda t: max_abs_pdf(t, law), 0.0, z, epsabs=1e-11)
            assert value == pytest.approx(max_abs_cdf(z, law), abs=1e-8)

    def test_max_abs_domain(self):
        with pytest.raises(DomainError):
            max_abs_cdf(-0.1, LimitLaw(LimitKind.MAX_ABS_PAIR))

    def test_singular_correlation(self):
        law = LimitLaw(LimitKind.MAX_ABS_PAIR, 1.0, 1.0, 1.0)
        with pytest.raises(SingularCorrelationError):
            max_abs_cdf(1.0, law)
        with pytest.raises(SingularCorrelationError):
            max_pair_pdf(0.0, LimitLaw(LimitKind.MAX_PAIR, 1.0, 1.0, -1.0))

    def test_invalid_law_parameters(self):
        with pytest.raises(DomainError):
            LimitLaw(LimitKind.MAX_PAIR, 0.0, 1.0, 0.0)
        with pytest.raises(DomainError):
            LimitLaw(LimitKind.MAX_PAIR, 1.0, 1.0, 1.5)

    @pytest.mark.parametrize("kind", list(LimitKind))
    @pytest.mark.parametrize("p", [0.05, 0.5, 0.975])
    def test_quantile_inverts_cdf(self, kind, p):
        law = LimitLaw(kind, 0.9, 1.6, -0.25)
        q = limit_quantile(p, law)
        assert limit_law_cdf(q, law) == pytest.approx(p, abs=1e-8)
        assert limit_law_pdf(q, law) > 0.0

    def test_quantile_domain(self):
        with pytest.raises(DomainError):
            limit_quantile(1.0, LimitLaw(LimitKind.NORMAL1))


class TestCaseSelection:

    cov = CovMatrix2(1.0, 0.2, 2.0)

    def test_normal_cases(self):
        assert select_limit_law(0.5, 0.1, self.cov).kind is LimitKind.NORMAL1
        assert select_limit_law(0.0, -0.3, self.cov).kind is LimitKind.NORMAL2

    def test_equal_components(self):
        assert select_limit_law(0.4, 0.4, self.cov).kind is LimitKind.MAX_PAIR
        assert select_limit_law(-0.4, 0.4, self.cov).kind is LimitKind.MAX_NEG_PAIR
        assert select_limit_law(0.0, 0.0, self.cov).kind is LimitKind.MAX_ABS_PAIR

    def test_parameters_come_from_covariance(self):
        law = select_limit_law(0.4, 0.4, self.cov)
        assert law.sigma2 == pytest.approx(math.sqrt(2.0))
        assert law.tau == pytest.approx(0.2 / math.sqrt(2.0))

    def test_regularization(self):
        fixed = CovMatrix2(-0.1, 0.3, 2.0).regularized(1e-6)
        assert (fixed.s11, fixed.s12, fixed.s22) == (1e-6, 0.0, 2.0)
        assert CovMatrix2(1.0, 0.3, 2.0).regularized(1e-6) == CovMatrix2(1.0, 0.3, 2.0)


@pytest.mark.slow
def test_rank_components_are_asymptotically_independent_normals():
    spec = parse_distribution("BVN(0)")
    n, reps = 1000, 2000
    pairs = np.array([
        (lambda e: (e.rho1, e.rho2))(lancaster_rank(sample(spec, n, stream_rng(99, "prop2", rep))))
        for rep in range(reps)
    ]) * math.sqrt(n)
    for column in pairs.T:
        assert stats.kstest(column, "norm").pvalue > 0.01
    # три стандартные ошибки выборочной корреляции
    assert abs(np.corrcoef(pairs.T)[0, 1]) < 3.0 / math.sqrt(reps)


@pytest.mark.slow
def test_linear_estimator_variance_under_normality():
    spec = parse_distribution("BVN(0.5)")
    n, reps = 800, 2000
    values = np.array([lancaster_linear(sample(spec, n, stream_rng(5, "bvn", rep))).rho1 for rep in range(reps)])
    assert n * values.var() == pytest.approx(sigma_star_bivariate_normal(0.5).s11, rel=0.1)
