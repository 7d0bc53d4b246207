#!/usr/bin/env python3
"""
蒙地卡羅模擬
============

產生真值軌跡、合成量測、初始化濾波器，並沿真值軌跡計算 PCRLB。

隨機數約定：每次試驗使用 SeedSequence(seed, spawn_key=(trial_index,))
導出的獨立串流，結果與排程和執行緒數無關。試驗內的抽樣順序固定為
初始真值 → 過程雜訊 → 量測雜訊 → 初始估計。
"""

from typing import TYPE_CHECKING

import numpy as np

from .coordmap import CoordinateMapPair, PolarMeasurementMap, as_state_vector, wrap_angle
from .debug import sim_debug_log
from .filters import FilterKind, step_filter
from .models import (
    CartesianState,
    DebiasMode,
    FilterFailure,
    MotionModel,
    ScenarioParams,
    StateEstimate,
    TrialRecord,
)
from .sigma import SigmaRule, generate_rule
from .utils.error_handler import ErrorHandler, EstimationError
from .utils.linalg import robust_cholesky, spd_invert, symmetrize


if TYPE_CHECKING:
    from .config import ExperimentConfig


# 試驗內被視為數值失敗（失追）的例外
NUMERICAL_FAILURES = (EstimationError, np.linalg.LinAlgError, ArithmeticError, ValueError)


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """第 trial_index 次試驗的獨立隨機串流"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial_index,)))


def sample_initial_truth(rng: np.random.Generator, params: ScenarioParams) -> CartesianState:
    """
    抽樣初始真值

    距離 ~ N(init_range_mean, init_range_std²)，方位與航向 ~ U(0, 2π)，
    速率 ~ speed_scale · χ²(2)。
    """
    r = rng.normal(params.init_range_mean, params.init_range_std)
    bearing = rng.uniform(0.0, 2.0 * np.pi)
    heading = rng.uniform(0.0, 2.0 * np.pi)
    speed = params.speed_scale * rng.chisquare(2)
    return CartesianState(
        x=r * np.cos(bearing),
        y=r * np.sin(bearing),
        xdot=speed * np.cos(heading),
        ydot=speed * np.sin(heading),
    )


def build_motion_model(params: ScenarioParams) -> MotionModel:
    """等速模型，各軸白雜訊加速度：每軸 qT·[[T²/3, T/2], [T/2, 1]]"""
    T, q = params.T, params.q
    A = np.eye(4)
    A[0, 2] = A[1, 3] = T

    Q = np.zeros((4, 4))
    for pos, vel in ((0, 2), (1, 3)):
        Q[pos, pos] = q * T**3 / 3.0
        Q[pos, vel] = Q[vel, pos] = q * T**2 / 2.0
        Q[vel, vel] = q * T
    return MotionModel(A=A, Q=Q)


def measurement_covariance(params: ScenarioParams) -> np.ndarray:
    """完整極座標量測雜訊協方差，含距離與距離變化率的相關"""
    R = np.diag(
        [params.sigma_r**2, params.sigma_alpha**2, params.sigma_rdot**2, params.sigma_cdot**2]
    )
    R[0, 2] = R[2, 0] = params.rho * params.sigma_r * params.sigma_rdot
    return R


def propagate_truth(x, model: MotionModel, rng: np.random.Generator) -> CartesianState:
    """x(k) = A x(k−1) + q，q ~ N(0, Q)"""
    noise = robust_cholesky(model.Q) @ rng.standard_normal(model.Q.shape[0])
    return CartesianState.from_array(model.A @ as_state_vector(x) + noise)


def synthesize_measurement(
    x_true,
    params: ScenarioParams,
    rng: np.random.Generator,
    coord_map: CoordinateMapPair | None = None,
) -> np.ndarray:
    """
    觀測分量 h_m(x) 加上取自 R_z 前 M×M 區塊的相關高斯雜訊

    未觀測分量不會被抽樣；方位結果折回 (−π, π]。
    """
    coord_map = coord_map or PolarMeasurementMap(params.observed_count)
    M = params.observed_count
    R_m = measurement_covariance(params)[:M, :M]
    z = coord_map.h_m(as_state_vector(x_true), M) + robust_cholesky(R_m) @ rng.standard_normal(M)
    for index in coord_map.angular_indices:
        if index < M:
            z[index] = wrap_angle(z[index])
    return z


def initialize_filter(
    x_true0,
    rng: np.random.Generator | None,
    params: ScenarioParams | None = None,
) -> StateEstimate:
    """
    初始估計：協方差 diag(σ_p², σ_p², σ_v², σ_v²)，均值 ~ N(x(0), P(0|0))

    rng 為 None 或 params.perturb_initial 為 False 時，均值等於真值。
    """
    params = params or ScenarioParams()
    P0 = params.initial_covariance
    mean = as_state_vector(x_true0).copy()
    if rng is not None and params.perturb_initial:
        mean = mean + robust_cholesky(P0) @ rng.standard_normal(4)
    return StateEstimate(mean=mean, covariance=P0, k=0)


def pcrlb(
    truth: np.ndarray,
    params: ScenarioParams,
    model: MotionModel,
    coord_map: CoordinateMapPair | None = None,
) -> np.ndarray:
    """
    沿真值軌跡遞迴計算後驗 Cramér–Rao 下界

    J(0) = P(0|0)⁻¹，J(k) = [Q + A J(k−1)⁻¹ Aᵗ]⁻¹ + H(k)ᵗ R_m⁻¹ H(k)，
    H(k) 為真值處的量測 Jacobian。

    Args:
        truth: (n+1, 4) 真值軌跡
        params: 情境參數
        model: 運動模型
        coord_map: 座標映射（預設為極座標）

    Returns:
        np.ndarray: (n+1, 2)，每列為位置與速度區塊的 trace(J⁻¹)

    Raises:
        InversionError: 資訊矩陣奇異
    """
    coord_map = coord_map or PolarMeasurementMap(params.observed_count)
    truth = np.asarray(truth, dtype=float)
    M = params.observed_count
    R_inv = spd_invert(measurement_covariance(params)[:M, :M], {"operation": "pcrlb"})
    A, Q = model.A, model.Q

    bounds = np.empty((truth.shape[0], 2))
    J = spd_invert(params.initial_covariance, {"operation": "pcrlb", "k": 0})
    for k in range(truth.shape[0]):
        if k > 0:
            prior = Q + A @ spd_invert(J, {"operation": "pcrlb", "k": k}) @ A.T
            H = coord_map.measurement_jacobian(truth[k], M)
            J = symmetrize(spd_invert(prior, {"operation": "pcrlb", "k": k}) + H.T @ R_inv @ H)
        bound = spd_invert(J, {"operation": "pcrlb", "k": k})
        bounds[k] = (bound[0, 0] + bound[1, 1], bound[2, 2] + bound[3, 3])
    return bounds


def run_trial(
    trial_index: int,
    config: "ExperimentConfig",
    rule: SigmaRule | None = None,
    seed: int | None = None,
) -> TrialRecord:
    """
    執行一次試驗：所有選定濾波器處理同一組量測

    單一濾波器的數值失敗只會截斷它自己的估計序列並留下失敗記錄。

    Args:
        trial_index: 試驗編號
        config: 實驗配置
        rule: 共用的 sigma 點規則
        seed: 覆寫 config.seed（多次實驗時使用）

    Returns:
        TrialRecord: 真值、各濾波器估計、失敗記錄與本次 PCRLB
    """
    params = config.scenario()
    seed = config.seed if seed is None else seed
    rng = trial_rng(seed, trial_index)
    coord_map = PolarMeasurementMap(params.observed_count)
    rule = rule or generate_rule(coord_map.dimension)
    model = build_motion_model(params)
    R_z = measurement_covariance(params)
    mode = DebiasMode(config.debias_mode)

    truth = [sample_initial_truth(rng, params)]
    for _ in range(params.n_updates):
        truth.append(propagate_truth(truth[-1], model, rng))
    truth_array = np.stack([x.as_array() for x in truth])
    measurements = [
        synthesize_measurement(x, params, rng, coord_map) for x in truth_array[1:]
    ]
    initial = initialize_filter(truth_array[0], rng, params)

    record = TrialRecord(trial_index=trial_index, seed=seed, truth=truth_array)
    bounds = pcrlb(truth_array, params, model, coord_map)
    record.pcrlb_pos, record.pcrlb_vel = bounds[:, 0], bounds[:, 1]

    for name in config.filters:
        kind = FilterKind(name)
        estimates = [initial]
        est = initial
        try:
            with np.errstate(divide="raise", invalid="raise", over="raise"):
                for z_m in measurements:
                    est = step_filter(kind, est, z_m, R_z, model, coord_map, rule, mode)
                    estimates.append(est)
        except NUMERICAL_FAILURES as e:
            context = {"operation": "run_trial", "trial": trial_index, "filter": name, "k": est.k + 1}
            response = ErrorHandler.create_error_response(e, context, include_solutions=False)
            record.failures[name] = FilterFailure(
                filter=name,
                step=est.k + 1,
                error_type=response["error_type"],
                message=response["detail"],
                error_id=response["error_id"],
            )
            sim_debug_log(f"試驗 {trial_index} 的 {name} 在 k={est.k + 1} 失敗：{e}")
        record.estimates[name] = estimates

    return record
