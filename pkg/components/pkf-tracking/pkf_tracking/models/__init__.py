"""
數據模型
"""

from .measurement import ConvertedMeasurement, DebiasMode, MeasurementFrame
from .records import (
    FilterFailure,
    MetricsSeries,
    ObservedCase,
    ScenarioParams,
    TrialRecord,
)
from .state import CartesianState, MotionModel, PolarState, StateEstimate


__all__ = [
    "CartesianState",
    "ConvertedMeasurement",
    "DebiasMode",
    "FilterFailure",
    "MeasurementFrame",
    "MetricsSeries",
    "MotionModel",
    "ObservedCase",
    "PolarState",
    "ScenarioParams",
    "StateEstimate",
    "TrialRecord",
]
