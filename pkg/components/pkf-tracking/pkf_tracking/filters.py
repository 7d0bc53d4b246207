#!/usr/bin/env python3
"""
濾波器
======

三種濾波器共用同一個 StateEstimate 遞迴物件：
- PKF：轉換量測 + 資訊形式更新
- EKF：量測 Jacobian 取 J_g⁻¹ 的前 M 列，Joseph 形式協方差更新
- SPKF：以同一套五階 sigma 點規則計算量測矩的 Gauss 濾波器

每一步都是純函數 state → state，沒有共享的可變狀態。
"""

from enum import Enum

import numpy as np

from .convert import convert_measurement
from .coordmap import CoordinateMapPair
from .debug import filter_debug_log
from .models import ConvertedMeasurement, DebiasMode, MotionModel, StateEstimate
from .sigma import SigmaRule, generate_rule
from .utils.error_handler import ConditioningError
from .utils.linalg import solve, spd_invert, symmetrize


class FilterKind(Enum):
    """可選的濾波器"""

    PKF = "pkf"
    SPKF = "spkf"
    EKF = "ekf"


def predict(est: StateEstimate, model: MotionModel) -> StateEstimate:
    """x̂(k|k−1) = A x̂，P(k|k−1) = A P Aᵗ + Q"""
    A = model.A
    return StateEstimate(
        mean=A @ est.mean,
        covariance=symmetrize(A @ est.covariance @ A.T + model.Q),
        k=est.k + 1,
    )


def information_update(
    P_pred: np.ndarray, precision: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """
    資訊形式的協方差與增益

    Returns:
        (P(k|k), G)：P(k|k) = [P⁻¹ + R̄⁻¹]⁻¹，G = P(k|k) R̄⁻¹

    Raises:
        InversionError: 預測協方差或資訊矩陣不是數值正定
    """
    information = spd_invert(P_pred, {"operation": "pkf_update", "matrix": "P_pred"}) + precision
    P_upd = spd_invert(information, {"operation": "pkf_update", "matrix": "information"})
    return P_upd, P_upd @ precision


def pkf_update(pred: StateEstimate, cm: ConvertedMeasurement) -> StateEstimate:
    """以轉換量測做資訊形式更新，時間索引不變"""
    P_upd, G = information_update(pred.covariance, cm.precision)
    return StateEstimate(
        mean=pred.mean + G @ (cm.z_bar - pred.mean), covariance=P_upd, k=pred.k
    )


def pkf_step(
    est: StateEstimate,
    z_m: np.ndarray,
    R_z: np.ndarray,
    model: MotionModel,
    coord_map: CoordinateMapPair,
    rule: SigmaRule | None = None,
    mode: DebiasMode = DebiasMode.CLOSED_FORM,
) -> StateEstimate:
    """
    PKF 的一個完整週期：預測 → 量測轉換 → 資訊形式更新

    Args:
        est: 上一步的估計
        z_m: 觀測分量
        R_z: 完整量測雜訊協方差（N×N）
        model: 運動模型
        coord_map: 座標映射
        rule: sigma 點規則
        mode: 去偏形式

    Returns:
        StateEstimate: 更新後的估計
    """
    pred = predict(est, model)
    cm = convert_measurement(z_m, pred, R_z, coord_map, rule, mode)
    return pkf_update(pred, cm)


def kalman_update(
    pred: StateEstimate, z: np.ndarray, H: np.ndarray, R: np.ndarray
) -> StateEstimate:
    """線性量測 z = H x + v 的標準 Kalman 更新（協方差形式）"""
    P = pred.covariance
    S = H @ P @ H.T + R
    K = solve(S, H @ P, {"operation": "kalman_update"}).T
    I_KH = np.eye(P.shape[0]) - K @ H
    return StateEstimate(
        mean=pred.mean + K @ (np.asarray(z, dtype=float) - H @ pred.mean),
        covariance=symmetrize(I_KH @ P),
        k=pred.k,
    )


def _joseph(P: np.ndarray, K: np.ndarray, H: np.ndarray, R: np.ndarray) -> np.ndarray:
    I_KH = np.eye(P.shape[0]) - K @ H
    return symmetrize(I_KH @ P @ I_KH.T + K @ R @ K.T)


def ekf_step(
    est: StateEstimate,
    z_m: np.ndarray,
    R_zm: np.ndarray,
    model: MotionModel,
    coord_map: CoordinateMapPair,
) -> StateEstimate:
    """
    EKF 一個週期

    量測 Jacobian 為 J_g⁻¹(h(x̂)) 的前 M 列；方位殘差折回 (−π, π]。

    Raises:
        SingularityError: 預測位置在原點
        InversionError: 新息協方差奇異
    """
    pred = predict(est, model)
    z_m = np.atleast_1d(np.asarray(z_m, dtype=float))
    M = z_m.shape[0]

    H = coord_map.measurement_jacobian(pred.mean, M)
    innovation = coord_map.residual(z_m, coord_map.h_m(pred.mean, M))
    P = pred.covariance
    S = H @ P @ H.T + R_zm
    K = solve(S, H @ P, {"operation": "ekf_step", "k": pred.k}).T

    return StateEstimate(
        mean=pred.mean + K @ innovation, covariance=_joseph(P, K, H, R_zm), k=pred.k
    )


def spkf_step(
    est: StateEstimate,
    z_m: np.ndarray,
    R_zm: np.ndarray,
    model: MotionModel,
    coord_map: CoordinateMapPair,
    rule: SigmaRule | None = None,
) -> StateEstimate:
    """
    Sigma 點 Gauss 濾波器一個週期

    量測均值、新息協方差與交叉協方差都以 sigma 點計算；
    方位偏差相對預測方位折回，避免在 ±π 接縫處平均出錯誤的角度。

    協方差更新 P − K Cᵗ − C Kᵗ + K S Kᵗ 是 Joseph 形式的 sigma 點對應：
    以交叉協方差 C 取代 P Hᵗ、以 S 取代 H P Hᵗ + R 後即為
    (I − K H) P (I − K H)ᵗ + K R Kᵗ。
    """
    pred = predict(est, model)
    rule = rule or generate_rule(coord_map.dimension)
    z_m = np.atleast_1d(np.asarray(z_m, dtype=float))
    M = z_m.shape[0]
    w = rule.weights

    points = rule.scaled_points(pred.mean, pred.covariance)
    center = coord_map.h_m(pred.mean, M)
    offsets = coord_map.residual(coord_map.h_m(points, M), center)
    mean_offset = w @ offsets
    z_pred = center + mean_offset

    dz = offsets - mean_offset
    dx = points - w @ points
    S = symmetrize((dz.T * w) @ dz + R_zm)
    C = (dx.T * w) @ dz

    K = solve(S, C.T, {"operation": "spkf_step", "k": pred.k}).T
    innovation = coord_map.residual(z_m, z_pred)
    P = pred.covariance
    # Joseph 形式
    P_upd = symmetrize(P - K @ C.T - C @ K.T + K @ S @ K.T)
    return StateEstimate(mean=pred.mean + K @ innovation, covariance=P_upd, k=pred.k)


def step_filter(
    kind: FilterKind,
    est: StateEstimate,
    z_m: np.ndarray,
    R_z: np.ndarray,
    model: MotionModel,
    coord_map: CoordinateMapPair,
    rule: SigmaRule | None = None,
    mode: DebiasMode = DebiasMode.CLOSED_FORM,
) -> StateEstimate:
    """
    依種類執行一個濾波週期

    R_z 一律傳入完整 N×N 協方差；EKF 與 SPKF 只使用觀測分量的區塊。

    Raises:
        ConditioningError: 更新後出現非有限值
    """
    M = np.atleast_1d(z_m).shape[0]
    if kind is FilterKind.PKF:
        result = pkf_step(est, z_m, R_z, model, coord_map, rule, mode)
    elif kind is FilterKind.SPKF:
        result = spkf_step(est, z_m, R_z[:M, :M], model, coord_map, rule)
    else:
        result = ekf_step(est, z_m, R_z[:M, :M], model, coord_map)

    if not (np.all(np.isfinite(result.mean)) and np.all(np.isfinite(result.covariance))):
        filter_debug_log(f"{kind.value} 在 k={result.k} 產生非有限估計")
        raise ConditioningError(
            "filter produced a non-finite estimate", {"filter": kind.value, "k": result.k}
        )
    return result
