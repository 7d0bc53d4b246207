from itertools import product

import numpy as np
import pytest
from scipy.linalg import sqrtm

from pkf_tracking.coordmap import PolarMeasurementMap
from pkf_tracking.sigma import expectations_of_converted, generate_rule, transform
from pkf_tracking.utils.error_handler import DomainError


def gaussian_moment(exponents) -> float:
    """E[∏ u_i^{e_i}]，u ~ N(0, I)"""
    value = 1.0
    for e in exponents:
        if e % 2:
            return 0.0
        value *= float(np.prod(np.arange(e - 1, 0, -2))) if e else 1.0
    return value


class TestRule:
    def test_one_dimensional_rule(self):
        rule = generate_rule(1)
        order = np.argsort(rule.points[:, 0])
        np.testing.assert_allclose(rule.points[order, 0], [-np.sqrt(3.0), 0.0, np.sqrt(3.0)])
        np.testing.assert_allclose(rule.weights[order], [1 / 6, 2 / 3, 1 / 6])

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 6])
    def test_size_and_weight_sum(self, n):
        rule = generate_rule(n)
        assert rule.size == 2 * n * n + 1
        assert rule.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_four_dimensional_axis_points_carry_no_weight(self, rule):
        assert rule.size == 33
        axis = np.count_nonzero(rule.points, axis=1) == 1
        np.testing.assert_allclose(rule.weights[axis], 0.0, atol=1e-15)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_exact_to_degree_five(self, n):
        rule = generate_rule(n)
        for exponents in product(range(6), repeat=n):
            if sum(exponents) > 5:
                continue
            assert rule.moment(exponents) == pytest.approx(
                gaussian_moment(exponents), abs=1e-10
            ), exponents

    def test_rule_is_cached_and_read_only(self):
        rule = generate_rule(3)
        assert generate_rule(3) is rule
        with pytest.raises(ValueError):
            rule.points[0, 0] = 1.0

    def test_dimension_must_be_positive(self):
        with pytest.raises(DomainError):
            generate_rule(0)


class TestTransform:
    def test_identity_reproduces_moments(self, rule, make_spd):
        C = make_spd(4)
        stats = transform(rule, np.zeros(4), C, lambda u: u)
        np.testing.assert_allclose(stats.mean, 0.0, atol=1e-10)
        np.testing.assert_allclose(stats.covariance, C, rtol=1e-10, atol=1e-10)
        assert stats.psd_violation is None

    def test_affine_map(self, rule, make_spd, rng):
        C = make_spd(4)
        m = rng.normal(size=4)
        F = rng.normal(size=(3, 4))
        c = rng.normal(size=3)
        stats = transform(rule, m, C, lambda u: u @ F.T + c)
        np.testing.assert_allclose(stats.mean, F @ m + c, rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(stats.covariance, F @ C @ F.T, rtol=1e-9, atol=1e-9)

    def test_squares_of_standard_normal(self):
        stats = transform(generate_rule(2), np.zeros(2), np.eye(2), lambda u: u * u)
        np.testing.assert_allclose(stats.mean, [1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(stats.covariance, 2.0 * np.eye(2), atol=1e-12)

    def test_pointwise_and_batched_agree(self, rule, make_spd):
        C = make_spd(4)

        def quadratic(u):
            return np.stack([u[..., 0] * u[..., 1], u[..., 2] ** 2], axis=-1)

        batched = transform(rule, np.ones(4), C, quadratic)
        pointwise = transform(rule, np.ones(4), C, quadratic, batched=False)
        np.testing.assert_allclose(batched.mean, pointwise.mean, rtol=1e-12)
        np.testing.assert_allclose(batched.covariance, pointwise.covariance, rtol=1e-12)

    def test_independent_of_square_root_choice(self, rule, make_spd):
        C = make_spd(4)
        mean = np.array([1.0, -2.0, 0.5, 3.0])

        def quadratic(x):
            return x[..., 0] * x[..., 1] + x[..., 2] ** 2

        stats = transform(rule, mean, C, lambda u: quadratic(u)[..., None])
        S = np.real(sqrtm(C))
        points = mean + rule.points @ S.T
        expected = rule.weights @ quadratic(points)
        assert stats.mean[0] == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_dimension_mismatch(self, rule):
        with pytest.raises(DomainError):
            transform(rule, np.zeros(3), np.eye(3), lambda u: u)


class TestConvertedExpectations:
    x_hat = np.array([3000.0, 1000.0, 5.0, -3.0])

    def test_zero_covariance_returns_prediction(self):
        stats = expectations_of_converted(self.x_hat, np.zeros((4, 4)), PolarMeasurementMap())
        np.testing.assert_allclose(stats.mean, self.x_hat, rtol=1e-12)
        np.testing.assert_allclose(stats.covariance, 0.0, atol=1e-9)

    def test_bearing_noise_shrinks_mean(self):
        sigma_alpha = 0.0873
        cov = np.diag([0.0, sigma_alpha**2, 0.0, 0.0])
        stats = expectations_of_converted(self.x_hat, cov, PolarMeasurementMap())
        np.testing.assert_allclose(
            stats.mean, np.exp(-0.5 * sigma_alpha**2) * self.x_hat, rtol=1e-4
        )

    def test_matches_monte_carlo_covariance(self, rng, polar_noise):
        pmap = PolarMeasurementMap()
        x_hat = np.array([4000.0, 0.0, 0.0, 0.0])
        stats = expectations_of_converted(x_hat, polar_noise, pmap)

        samples = rng.multivariate_normal(np.zeros(4), polar_noise, size=1_000_000)
        images = pmap.g(pmap.h(x_hat) - samples)
        empirical = np.cov(images, rowvar=False)

        np.testing.assert_allclose(np.diag(stats.covariance), np.diag(empirical), rtol=0.05)
        scale = np.sqrt(empirical[0, 0] * empirical[1, 1])
        assert abs(stats.covariance[0, 1] - empirical[0, 1]) < 0.05 * scale
