"""
PKF Tracking 工具模組
"""

from .error_handler import (
    ConditioningError,
    ConfigError,
    DecompositionError,
    DomainError,
    ErrorHandler,
    ErrorSeverity,
    ErrorType,
    EstimationError,
    InversionError,
    SingularityError,
)
from .linalg import enforce_psd, robust_cholesky, solve, spd_invert, spd_solve, symmetrize
from .resource_monitor import RunMonitor, default_worker_count


__all__ = [
    "ConditioningError",
    "ConfigError",
    "DecompositionError",
    "DomainError",
    "ErrorHandler",
    "ErrorSeverity",
    "ErrorType",
    "EstimationError",
    "InversionError",
    "RunMonitor",
    "SingularityError",
    "default_worker_count",
    "enforce_psd",
    "robust_cholesky",
    "solve",
    "spd_invert",
    "spd_solve",
    "symmetrize",
]
