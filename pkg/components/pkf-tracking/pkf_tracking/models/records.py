#!/usr/bin/env python3
"""
實驗記錄模型
============

情境參數、單次試驗記錄與聚合後的指標序列。
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .state import StateEstimate


class ObservedCase(Enum):
    """感測器實際觀測的極座標分量"""

    RANGE_BEARING = "rb"
    RANGE_BEARING_RANGERATE = "rbd"

    @property
    def observed_count(self) -> int:
        return 2 if self is ObservedCase.RANGE_BEARING else 3


@dataclass(frozen=True)
class ScenarioParams:
    """
    單一蒙地卡羅情境的物理參數

    預設值為距離／方位量測的基準情境。
    """

    T: float = 2.0  # 更新週期 (秒)
    n_updates: int = 100
    sigma_r: float = 30.0
    sigma_alpha: float = 0.0873
    sigma_rdot: float = 10.0
    sigma_cdot: float = 10.0
    rho: float = -0.2  # 距離與距離變化率的相關係數
    q: float = 0.44**2  # 過程雜訊強度 (m²/s³)
    init_range_mean: float = 4000.0
    init_range_std: float = 30.0
    speed_scale: float = 10.0
    init_position_std: float = 30.0
    init_velocity_std: float = 10.0
    perturb_initial: bool = True
    case: ObservedCase = ObservedCase.RANGE_BEARING

    @property
    def observed_count(self) -> int:
        return self.case.observed_count

    @property
    def initial_covariance(self) -> np.ndarray:
        p, v = self.init_position_std**2, self.init_velocity_std**2
        return np.diag([p, p, v, v])


@dataclass(frozen=True)
class FilterFailure:
    """單一濾波器在試驗中的數值失敗"""

    filter: str
    step: int
    error_type: str
    message: str
    error_id: str = ""


@dataclass
class TrialRecord:
    """
    一次試驗的真值軌跡、各濾波器估計與失敗記錄

    truth 為 (n_updates + 1, 4) 陣列。成功的濾波器估計序列長度同為
    n_updates + 1；失敗的濾波器序列在失敗步驟前截斷，並在 failures 中留下記錄。
    """

    trial_index: int
    seed: int
    truth: np.ndarray
    estimates: dict[str, list[StateEstimate]] = field(default_factory=dict)
    failures: dict[str, FilterFailure] = field(default_factory=dict)
    pcrlb_pos: np.ndarray | None = None
    pcrlb_vel: np.ndarray | None = None

    @property
    def n_updates(self) -> int:
        return self.truth.shape[0] - 1

    def failed(self, filter_name: str) -> bool:
        return filter_name in self.failures

    def errors(self, filter_name: str) -> np.ndarray:
        """估計誤差 x̂(k|k) − x(k)，只含已完成的步驟"""
        estimates = self.estimates.get(filter_name, [])
        if not estimates:
            return np.empty((0, 4))
        means = np.stack([e.mean for e in estimates])
        return means - self.truth[: len(estimates)]

    def covariances(self, filter_name: str) -> np.ndarray:
        estimates = self.estimates.get(filter_name, [])
        if not estimates:
            return np.empty((0, 4, 4))
        return np.stack([e.covariance for e in estimates])


@dataclass
class MetricsSeries:
    """
    單一濾波器在 k = 1..n_updates 上的聚合指標

    區間欄位在無法計算時為 NaN（例如所有試驗都失追時的 MSE 區間）。
    """

    filter: str
    k: np.ndarray
    anees: np.ndarray
    anees_lo: np.ndarray
    anees_hi: np.ndarray
    mse_pos: np.ndarray
    mse_pos_lo: np.ndarray
    mse_pos_hi: np.ndarray
    mse_vel: np.ndarray
    mse_vel_lo: np.ndarray
    mse_vel_hi: np.ndarray
    pcrlb_pos: np.ndarray
    pcrlb_vel: np.ndarray
    trials: int
    lost: int
    loss_ci: tuple[int, int] | None
