#!/usr/bin/env python3
"""
轉換量測
========

把量測座標下的觀測轉成笛卡兒座標的去偏量測 z̄_x 與其精度矩陣 R̄_x⁻¹：

1. 未觀測分量以預測量測填補
2. 預測量測協方差 P_z = J_h P_x J_hᵗ
3. 以 sigma 點計算預測誤差與合併誤差兩組轉換統計
4. 去偏（解析乘性、數值乘性或數值加性）
5. 轉換量測協方差 R̂_x
6. 資訊歸零：移除填補分量帶來的直接資訊，得到秩為 M 的精度矩陣
"""

import numpy as np

from .coordmap import CoordinateMapPair, as_state_vector, partition_inverse_transpose
from .debug import filter_debug_log
from .models import ConvertedMeasurement, DebiasMode, MeasurementFrame, StateEstimate
from .sigma import SigmaRule, TransformedStats, expectations_of_converted, generate_rule
from .utils.error_handler import DomainError
from .utils.linalg import enforce_psd, spd_invert, symmetrize


# 乘性去偏分母的相對門檻
DEBIAS_ZERO_TOLERANCE = 1e-12


def augment_unobserved(
    z_m: np.ndarray, predicted, coord_map: CoordinateMapPair
) -> np.ndarray:
    """
    以預測量測 h_u(x̂(k|k−1)) 補上未觀測分量

    Args:
        z_m: 觀測分量（長度 M）
        predicted: 預測狀態
        coord_map: 座標映射

    Returns:
        np.ndarray: 長度 N 的完整量測向量
    """
    z_m = np.atleast_1d(np.asarray(z_m, dtype=float))
    M = z_m.shape[0]
    if not 1 <= M <= coord_map.dimension:
        raise DomainError(
            f"observed vector length {M} outside 1..{coord_map.dimension}",
            {"operation": "augment_unobserved"},
        )
    if M == coord_map.dimension:
        return z_m.copy()
    return np.concatenate([z_m, coord_map.h_u(as_state_vector(predicted), M)])


def predicted_measurement_covariance(
    P_x: np.ndarray, predicted, coord_map: CoordinateMapPair
) -> np.ndarray:
    """P_z = J_h P_x J_hᵗ，J_h 取 J_g⁻¹ 在 h(x̂) 的值"""
    J_h = coord_map.jacobian_h(as_state_vector(predicted))
    return symmetrize(J_h @ np.asarray(P_x, dtype=float) @ J_h.T)


def debias_multiplicative(mu_x: np.ndarray, mu_v: np.ndarray) -> np.ndarray:
    """
    乘性去偏矩陣 B = diag(μ_v)⁻¹ diag(μ_x)

    分母接近零的分量（|μ_v,i| < 1e-12·‖μ_v‖）沒有明確的修正量，取 1。
    """
    mu_x = np.asarray(mu_x, dtype=float)
    mu_v = np.asarray(mu_v, dtype=float)
    threshold = DEBIAS_ZERO_TOLERANCE * np.linalg.norm(mu_v)
    safe = np.abs(mu_v) > threshold
    ratios = np.ones_like(mu_v)
    np.divide(mu_x, mu_v, out=ratios, where=safe)
    return np.diag(ratios)


def debias_additive(mu_x: np.ndarray, mu_v: np.ndarray) -> np.ndarray:
    """加性去偏向量 b = μ_x − μ_v"""
    return np.asarray(mu_x, dtype=float) - np.asarray(mu_v, dtype=float)


def converted_covariance(
    stats_x: TransformedStats, stats_v: TransformedStats, debias: np.ndarray
) -> np.ndarray:
    """
    轉換量測協方差 R̂_x

    debias 為二維矩陣時視為乘性 B：R̂_x = B C̄_v B − C̄_x；
    為一維向量時視為加性 b：R̂_x = C̄_v − C̄_x。

    Raises:
        ConditioningError: 結果有明顯負特徵值（預測協方差遠大於量測雜訊時常見）
    """
    debias = np.asarray(debias, dtype=float)
    if debias.ndim == 2:
        R_hat = debias @ stats_v.covariance @ debias.T - stats_x.covariance
        form = "multiplicative"
    else:
        R_hat = stats_v.covariance - stats_x.covariance
        form = "additive"
    return enforce_psd(R_hat, context={"operation": "converted_covariance", "debias": form})


def measurement_frame_precision(R_hat_x: np.ndarray, J_g: np.ndarray, M: int) -> np.ndarray:
    """
    W (J_gᵗ R̂_x⁻¹ J_g) Wᵗ：量測座標下的精度矩陣，未觀測的列與行為零
    """
    precision = symmetrize(J_g.T @ spd_invert(R_hat_x, {"operation": "zero_information"}) @ J_g)
    precision[M:, :] = 0.0
    precision[:, M:] = 0.0
    return precision


def zero_information(
    R_hat_x: np.ndarray, coord_map: CoordinateMapPair, predicted, M: int
) -> np.ndarray:
    """
    資訊歸零後的笛卡兒精度矩陣

    R̄_x⁻¹ = J_g⁻ᵗ [W (J_gᵗ R̂_x⁻¹ J_g) Wᵗ] J_g⁻¹，Jacobian 取在 h(x̂) 上。
    M = N 時 W = I，直接回傳 R̂_x⁻¹。

    Raises:
        InversionError: R̂_x 奇異
    """
    R_hat_x = np.asarray(R_hat_x, dtype=float)
    if M == coord_map.dimension:
        return symmetrize(spd_invert(R_hat_x, {"operation": "zero_information"}))

    z_pred = coord_map.h(as_state_vector(predicted))
    J_g = coord_map.jacobian_g(z_pred)
    J_g_inv = coord_map.jacobian_g_inverse(z_pred)
    bracket = measurement_frame_precision(R_hat_x, J_g, M)
    return symmetrize(J_g_inv.T @ bracket @ J_g_inv)


def block_assembly(R_zm_inv: np.ndarray, J_g_inv: np.ndarray, M: int) -> np.ndarray:
    """
    以分塊形式組出資訊歸零後的精度矩陣

    令 J_g⁻ᵗ 的觀測行區塊為 [A; C]，則
    R̄_x⁻¹ = [[A R Aᵗ, A R Cᵗ], [C R Aᵗ, C R Cᵗ]]，R 為 M×M 的觀測精度。
    """
    A, _, C, _ = partition_inverse_transpose(J_g_inv, M)
    R = np.asarray(R_zm_inv, dtype=float)
    return np.block([[A @ R @ A.T, A @ R @ C.T], [C @ R @ A.T, C @ R @ C.T]])


def convert_measurement(
    z_m: np.ndarray,
    predicted: StateEstimate,
    R_z: np.ndarray,
    coord_map: CoordinateMapPair,
    rule: SigmaRule | None = None,
    mode: DebiasMode = DebiasMode.CLOSED_FORM,
) -> ConvertedMeasurement:
    """
    完整的量測轉換流程

    Args:
        z_m: 觀測分量
        predicted: 預測估計（均值與協方差）
        R_z: 完整量測雜訊協方差（N×N，含未觀測分量的假設標準差）
        coord_map: 座標映射
        rule: sigma 點規則（預設為 N 維五階規則）
        mode: 去偏形式

    Returns:
        ConvertedMeasurement: z̄_x 與秩為 M 的精度矩陣
    """
    rule = rule or generate_rule(coord_map.dimension)
    x_hat = predicted.mean
    frame = MeasurementFrame(
        z_full=augment_unobserved(z_m, x_hat, coord_map),
        observed_count=np.atleast_1d(z_m).shape[0],
        R_z=R_z,
    )

    P_z = predicted_measurement_covariance(predicted.covariance, x_hat, coord_map)
    stats_x = expectations_of_converted(x_hat, P_z, coord_map, rule)
    stats_v = expectations_of_converted(x_hat, P_z + frame.R_z, coord_map, rule)
    converted = coord_map.g(coord_map.to_principal(frame.z_full))

    if mode is DebiasMode.NUMERICAL_ADDITIVE:
        b = debias_additive(stats_x.mean, stats_v.mean)
        z_bar = converted + b
        R_hat = converted_covariance(stats_x, stats_v, b)
    else:
        B = None
        if mode is DebiasMode.CLOSED_FORM:
            B = coord_map.closed_form_debias(frame.R_z)
            if B is None:
                filter_debug_log("映射沒有解析去偏，改用數值乘性去偏")
        if B is None:
            B = debias_multiplicative(stats_x.mean, stats_v.mean)
        z_bar = B @ converted
        R_hat = converted_covariance(stats_x, stats_v, B)

    precision = zero_information(R_hat, coord_map, x_hat, frame.observed_count)
    return ConvertedMeasurement(z_bar=z_bar, precision=precision)
