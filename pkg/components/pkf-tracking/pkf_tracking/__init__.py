#!/usr/bin/env python3
"""
PKF Tracking
============

轉換量測精度 Kalman 濾波器（PKF）與其比較基準的狀態估計函式庫。

特色：
- 極座標 ↔ 笛卡兒座標雙射與解析 Jacobian
- 五階完全對稱 sigma 點規則
- 去偏轉換量測與資訊歸零精度矩陣
- PKF / EKF / SPKF 三種濾波器
- 蒙地卡羅實驗：ANEES、MSE 對 PCRLB、失追統計
"""

__version__ = "1.0.0"
__author__ = "Minidoracat"

from .convert import convert_measurement
from .coordmap import (
    CartesianMeasurementMap,
    CoordinateMapPair,
    PolarMeasurementMap,
    cartesian_to_polar,
    polar_to_cartesian,
)
from .filters import FilterKind, ekf_step, pkf_step, predict, spkf_step
from .models import (
    CartesianState,
    ConvertedMeasurement,
    DebiasMode,
    MotionModel,
    PolarState,
    StateEstimate,
)
from .sigma import SigmaRule, generate_rule, transform


__all__ = [
    "CartesianMeasurementMap",
    "CartesianState",
    "ConvertedMeasurement",
    "CoordinateMapPair",
    "DebiasMode",
    "FilterKind",
    "MotionModel",
    "PolarMeasurementMap",
    "PolarState",
    "SigmaRule",
    "StateEstimate",
    "__author__",
    "__version__",
    "cartesian_to_polar",
    "convert_measurement",
    "ekf_step",
    "generate_rule",
    "pkf_step",
    "polar_to_cartesian",
    "predict",
    "spkf_step",
    "transform",
]


def main():
    """主要入口點，用於 console script 執行"""
    from .__main__ import main as cli_main

    return cli_main()
