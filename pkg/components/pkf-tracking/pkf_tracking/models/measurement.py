#!/usr/bin/env python3
"""
量測資料模型

完整量測向量（觀測分量在前，未觀測分量在後）與轉換後量測。
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np


class DebiasMode(Enum):
    """去偏函數形式"""

    CLOSED_FORM = "closed_form"  # 座標映射提供的解析乘性去偏
    NUMERICAL_MULTIPLICATIVE = "numerical_multiplicative"
    NUMERICAL_ADDITIVE = "numerical_additive"


@dataclass(frozen=True)
class MeasurementFrame:
    """
    完整量測向量及其雜訊協方差

    z_full 的前 observed_count 個分量來自感測器，
    其餘分量以預測量測填補。
    """

    z_full: np.ndarray
    observed_count: int
    R_z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z_full", np.asarray(self.z_full, dtype=float))
        object.__setattr__(self, "R_z", np.asarray(self.R_z, dtype=float))


@dataclass(frozen=True)
class ConvertedMeasurement:
    """去偏的轉換量測 z̄_x 與其精度矩陣 R̄_x⁻¹（秩為 M）"""

    z_bar: np.ndarray
    precision: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z_bar", np.asarray(self.z_bar, dtype=float))
        object.__setattr__(self, "precision", np.asarray(self.precision, dtype=float))
