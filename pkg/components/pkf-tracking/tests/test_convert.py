import numpy as np
import pytest

from pkf_tracking.convert import (
    augment_unobserved,
    block_assembly,
    convert_measurement,
    converted_covariance,
    debias_additive,
    debias_multiplicative,
    measurement_frame_precision,
    predicted_measurement_covariance,
    zero_information,
)
from pkf_tracking.coordmap import PolarMeasurementMap
from pkf_tracking.models import DebiasMode, StateEstimate
from pkf_tracking.sigma import TransformedStats, expectations_of_converted
from pkf_tracking.utils.error_handler import ConditioningError


SIGMA_ALPHA = 0.0873


def rank(matrix: np.ndarray, rel: float = 1e-9) -> int:
    eigenvalues = np.linalg.eigvalsh(matrix)
    return int(np.sum(eigenvalues > rel * eigenvalues.max()))


class TestAugment:
    predicted = np.array([1000.0, 0.0, 10.0, 0.0])

    def test_full_observation_is_unchanged(self):
        z = np.array([900.0, 0.1, 3.0, 4.0])
        np.testing.assert_array_equal(augment_unobserved(z, self.predicted, PolarMeasurementMap()), z)

    def test_range_bearing_filled_from_prediction(self, polar_map):
        z = augment_unobserved(np.array([995.0, 0.01]), self.predicted, polar_map)
        np.testing.assert_allclose(z, [995.0, 0.01, 10.0, 0.0], atol=1e-12)

    def test_only_cross_range_rate_filled(self, doppler_map):
        z = augment_unobserved(np.array([995.0, 0.01, 9.0]), self.predicted, doppler_map)
        np.testing.assert_allclose(z, [995.0, 0.01, 9.0, 0.0], atol=1e-12)


class TestPredictedMeasurementCovariance:
    def test_zero_covariance(self):
        P_z = predicted_measurement_covariance(
            np.zeros((4, 4)), np.array([3000.0, 100.0, 1.0, 1.0]), PolarMeasurementMap()
        )
        np.testing.assert_array_equal(P_z, np.zeros((4, 4)))

    def test_identity_jacobian_at_unit_point(self, make_spd):
        P = make_spd(4)
        P_z = predicted_measurement_covariance(P, np.array([1.0, 0.0, 0.0, 0.0]), PolarMeasurementMap())
        np.testing.assert_allclose(P_z, P, rtol=1e-12)

    def test_result_is_symmetric_psd(self, make_spd):
        P_z = predicted_measurement_covariance(
            make_spd(4, 100.0), np.array([2500.0, -800.0, 7.0, 3.0]), PolarMeasurementMap()
        )
        np.testing.assert_array_equal(P_z, P_z.T)
        assert np.linalg.eigvalsh(P_z)[0] >= -1e-9 * np.trace(P_z)


class TestDebias:
    def test_equal_means_give_identity(self):
        mu = np.array([4000.0, 20.0, -3.0, 1.0])
        np.testing.assert_array_equal(debias_multiplicative(mu, mu), np.eye(4))
        np.testing.assert_array_equal(debias_additive(mu, mu), np.zeros(4))

    def test_near_zero_denominator_uses_one(self):
        B = debias_multiplicative(
            np.array([4010.0, 5.0, 3.0, 2.0]), np.array([4000.0, 1e-20, 3.0, 2.0])
        )
        np.testing.assert_allclose(np.diag(B), [4010.0 / 4000.0, 1.0, 1.0, 1.0])

    def test_closed_form_value(self, polar_noise):
        B = PolarMeasurementMap().closed_form_debias(polar_noise)
        assert B[0, 0] == pytest.approx(np.exp(0.5 * SIGMA_ALPHA**2), rel=1e-15)
        assert B[0, 0] == pytest.approx(1.003817, abs=1e-5)
        np.testing.assert_array_equal(B, B[0, 0] * np.eye(4))

    def test_numerical_matches_closed_form_for_small_prediction_error(self, polar_noise):
        pmap = PolarMeasurementMap()
        x_hat = np.array([3000.0, 2000.0, 10.0, -5.0])
        P_z = predicted_measurement_covariance(1e-6 * np.eye(4), x_hat, pmap)
        stats_x = expectations_of_converted(x_hat, P_z, pmap)
        stats_v = expectations_of_converted(x_hat, P_z + polar_noise, pmap)
        B = debias_multiplicative(stats_x.mean, stats_v.mean)
        np.testing.assert_allclose(np.diag(B), np.exp(0.5 * SIGMA_ALPHA**2), rtol=1e-4)

    def test_additive_offset_along_range(self, polar_noise):
        pmap = PolarMeasurementMap()
        x_hat = np.array([4000.0, 0.0, 0.0, 0.0])
        stats_x = expectations_of_converted(x_hat, np.zeros((4, 4)), pmap)
        stats_v = expectations_of_converted(x_hat, polar_noise, pmap)
        b = debias_additive(stats_x.mean, stats_v.mean)
        assert b[0] == pytest.approx(4000.0 * (1.0 - np.exp(-0.5 * SIGMA_ALPHA**2)), rel=1e-4)
        assert b[0] == pytest.approx(15.2, abs=0.05)
        np.testing.assert_allclose(b[1:], 0.0, atol=1e-8)

    def test_closed_form_is_unbiased(self, rng, polar_noise):
        pmap = PolarMeasurementMap()
        x_true = np.array([3000.0, 2000.0, 10.0, -5.0])
        noise = rng.multivariate_normal(np.zeros(4), polar_noise, size=1_000_000)
        converted = pmap.g(pmap.h(x_true) + noise) @ pmap.closed_form_debias(polar_noise).T
        stderr = converted.std(axis=0) / np.sqrt(converted.shape[0])
        assert np.all(np.abs(converted.mean(axis=0) - x_true) < 4.0 * stderr)


class TestConvertedCovariance:
    def _stats(self, mean, cov):
        return TransformedStats(mean=np.asarray(mean, dtype=float), covariance=np.asarray(cov, dtype=float))

    def test_multiplicative_without_prediction_error(self, make_spd):
        C_v = make_spd(4)
        B = np.diag([1.01, 1.02, 0.99, 1.0])
        stats_x = self._stats(np.ones(4), np.zeros((4, 4)))
        stats_v = self._stats(np.ones(4), C_v)
        np.testing.assert_allclose(
            converted_covariance(stats_x, stats_v, B), B @ C_v @ B, rtol=1e-12, atol=1e-12
        )

    def test_vanishing_noise_gives_zero(self, make_spd):
        stats = self._stats(np.ones(4), make_spd(4))
        np.testing.assert_allclose(converted_covariance(stats, stats, np.eye(4)), 0.0, atol=1e-12)

    def test_additive_form(self):
        stats_x = self._stats(np.zeros(4), np.eye(4))
        stats_v = self._stats(np.zeros(4), 3.0 * np.eye(4))
        np.testing.assert_allclose(
            converted_covariance(stats_x, stats_v, np.zeros(4)), 2.0 * np.eye(4), atol=1e-12
        )

    def test_negative_result_raises(self):
        stats_x = self._stats(np.zeros(4), 2.0 * np.eye(4))
        stats_v = self._stats(np.zeros(4), np.eye(4))
        with pytest.raises(ConditioningError):
            converted_covariance(stats_x, stats_v, np.zeros(4))

    def test_matches_monte_carlo(self, rng, polar_noise):
        pmap = PolarMeasurementMap()
        # 離開座標軸，位置區塊才有明顯的交叉項
        x_hat = np.array([4000.0 * np.cos(0.6), 4000.0 * np.sin(0.6), 0.0, 0.0])
        B = pmap.closed_form_debias(polar_noise)
        stats_x = expectations_of_converted(x_hat, np.zeros((4, 4)), pmap)
        stats_v = expectations_of_converted(x_hat, polar_noise, pmap)
        R_hat = converted_covariance(stats_x, stats_v, B)

        noise = rng.multivariate_normal(np.zeros(4), polar_noise, size=1_000_000)
        empirical = np.cov(pmap.g(pmap.h(x_hat) - noise) @ B.T, rowvar=False)
        np.testing.assert_allclose(np.diag(R_hat), np.diag(empirical), rtol=0.03)
        np.testing.assert_allclose(R_hat[:2, :2], empirical[:2, :2], rtol=0.03)
        assert abs(R_hat[0, 1]) > 0.5 * np.sqrt(R_hat[0, 0] * R_hat[1, 1])


class TestZeroInformation:
    predicted = np.array([300.0, -150.0, 12.0, 7.0])

    def test_full_observation_returns_inverse(self, make_spd):
        R_hat = make_spd(4)
        out = zero_information(R_hat, PolarMeasurementMap(4), self.predicted, 4)
        np.testing.assert_allclose(out, np.linalg.inv(R_hat), rtol=1e-10, atol=1e-12)

    def test_range_bearing_keeps_position_block_only(self, make_spd):
        out = zero_information(make_spd(4), PolarMeasurementMap(2), self.predicted, 2)
        np.testing.assert_array_equal(out[2:, :], 0.0)
        np.testing.assert_array_equal(out[:, 2:], 0.0)
        assert rank(out) == 2

    @pytest.mark.parametrize("M", [1, 2, 3])
    def test_matches_block_assembly(self, make_spd, M):
        pmap = PolarMeasurementMap(M)
        R_hat = make_spd(4)
        z_pred = pmap.h(self.predicted)
        J_g = pmap.jacobian_g(z_pred)
        J_g_inv = pmap.jacobian_g_inverse(z_pred)
        R_zm_inv = (J_g.T @ np.linalg.inv(R_hat) @ J_g)[:M, :M]

        out = zero_information(R_hat, pmap, self.predicted, M)
        expected = block_assembly(R_zm_inv, J_g_inv, M)
        np.testing.assert_allclose(out, expected, rtol=1e-8, atol=1e-10 * np.abs(expected).max())
        assert rank(out) == M

    def test_measurement_frame_rows_are_zeroed(self, make_spd):
        J_g = PolarMeasurementMap().jacobian_g(np.array([500.0, 0.4, 2.0, 1.0]))
        bracket = measurement_frame_precision(make_spd(4), J_g, 3)
        np.testing.assert_array_equal(bracket[3, :], 0.0)
        np.testing.assert_array_equal(bracket[:, 3], 0.0)
        assert np.all(np.diag(bracket)[:3] > 0.0)


class TestConvertMeasurement:
    predicted = StateEstimate(
        mean=np.array([3000.0, 1000.0, 5.0, -4.0]), covariance=np.diag([900.0, 900.0, 100.0, 100.0])
    )

    def test_closed_form_pipeline(self, polar_map, polar_noise):
        z_m = polar_map.h_m(self.predicted.mean)
        cm = convert_measurement(z_m, self.predicted, polar_noise, polar_map)
        B = polar_map.closed_form_debias(polar_noise)
        np.testing.assert_allclose(cm.z_bar, B @ self.predicted.mean, rtol=1e-12)
        np.testing.assert_array_equal(cm.precision, cm.precision.T)
        np.testing.assert_array_equal(cm.precision[2:, :], 0.0)
        assert rank(cm.precision) == 2

    def test_additive_pipeline_shifts_by_offset(self, polar_map, polar_noise):
        z_m = polar_map.h_m(self.predicted.mean)
        cm = convert_measurement(
            z_m, self.predicted, polar_noise, polar_map, mode=DebiasMode.NUMERICAL_ADDITIVE
        )
        shift = cm.z_bar - self.predicted.mean
        # 偏移沿視線方向向外
        assert shift[:2] @ self.predicted.mean[:2] > 0.0
        assert rank(cm.precision) == 2

    def test_numerical_multiplicative_close_to_closed_form(self, polar_map, polar_noise):
        z_m = polar_map.h_m(self.predicted.mean) + np.array([20.0, 0.01])
        closed = convert_measurement(z_m, self.predicted, polar_noise, polar_map)
        numerical = convert_measurement(
            z_m, self.predicted, polar_noise, polar_map, mode=DebiasMode.NUMERICAL_MULTIPLICATIVE
        )
        np.testing.assert_allclose(numerical.z_bar[:2], closed.z_bar[:2], rtol=1e-3)

    def test_doppler_case_has_rank_three(self, doppler_map, polar_noise):
        R_z = polar_noise.copy()
        R_z[2, 2] = 0.1**2
        R_z[0, 2] = R_z[2, 0] = -0.2 * 30.0 * 0.1
        z_m = doppler_map.h_m(self.predicted.mean)
        cm = convert_measurement(z_m, self.predicted, R_z, doppler_map)
        assert rank(cm.precision) == 3
        assert np.any(cm.precision[2:, :2] != 0.0)
