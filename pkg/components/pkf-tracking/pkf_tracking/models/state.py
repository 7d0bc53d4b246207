#!/usr/bin/env python3
"""
狀態資料模型
============

定義極座標／笛卡兒座標下的目標狀態、濾波器的遞迴估計物件與運動模型。
向量順序固定：笛卡兒為 (x, y, ẋ, ẏ)，極座標為 (r, α, ṙ, ċ)。
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PolarState:
    """極座標狀態（ċ = r·α̇ 為橫向速率）"""

    r: float  # 公尺
    alpha: float  # 弧度
    rdot: float  # 公尺/秒
    cdot: float  # 公尺/秒

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.alpha, self.rdot, self.cdot], dtype=float)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "PolarState":
        r, alpha, rdot, cdot = (float(v) for v in np.asarray(values, dtype=float))
        return cls(r, alpha, rdot, cdot)


@dataclass(frozen=True)
class CartesianState:
    """笛卡兒座標狀態"""

    x: float
    y: float
    xdot: float
    ydot: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.xdot, self.ydot], dtype=float)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "CartesianState":
        x, y, xdot, ydot = (float(v) for v in np.asarray(values, dtype=float))
        return cls(x, y, xdot, ydot)


@dataclass(frozen=True)
class StateEstimate:
    """
    濾波器的遞迴物件：均值、協方差與時間索引

    均值與協方差以 numpy 陣列保存，直接參與矩陣運算。
    """

    mean: np.ndarray
    covariance: np.ndarray
    k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).reshape(-1))
        object.__setattr__(self, "covariance", np.asarray(self.covariance, dtype=float))


@dataclass(frozen=True)
class MotionModel:
    """線性狀態方程 x(k) = A x(k-1) + q(k)，q ~ N(0, Q)"""

    A: np.ndarray
    Q: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=float))
