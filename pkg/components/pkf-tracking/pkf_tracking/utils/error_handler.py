"""
統一錯誤處理框架
================

提供統一的錯誤處理機制，包括：
- 數值錯誤類型分類與例外類別階層
- 用戶友好錯誤信息
- 錯誤上下文記錄（試驗編號、濾波器、步數）
- 解決方案建議

注意：單次試驗中的數值失敗只會被記錄為失追，不會中止整個實驗。
"""

import os
import time
import traceback
from enum import Enum
from typing import Any

from ..debug import debug_log


class ErrorType(Enum):
    """錯誤類型枚舉"""

    DOMAIN = "domain"  # 輸入超出定義域（例如非正距離）
    SINGULARITY = "singularity"  # 座標奇異點（原點）
    DECOMPOSITION = "decomposition"  # Cholesky 分解失敗
    CONDITIONING = "conditioning"  # 協方差非半正定
    INVERSION = "inversion"  # 矩陣不可逆
    CONFIGURATION = "config"  # 配置錯誤
    FILE_IO = "file_io"  # 文件 I/O 錯誤
    SYSTEM = "system"  # 其他系統錯誤


class ErrorSeverity(Enum):
    """錯誤嚴重程度"""

    LOW = "low"  # 低：單一步驟可恢復
    MEDIUM = "medium"  # 中：單一試驗失敗
    HIGH = "high"  # 高：整個實驗無法進行
    CRITICAL = "critical"  # 嚴重：程序無法正常運行


class EstimationError(Exception):
    """所有估計相關例外的基底類別"""

    error_type = ErrorType.SYSTEM

    def __init__(self, message: str, context: dict[str, Any] | None = None):
        super().__init__(message)
        self.context: dict[str, Any] = dict(context or {})


class DomainError(EstimationError, ValueError):
    error_type = ErrorType.DOMAIN


class SingularityError(EstimationError, ArithmeticError):
    error_type = ErrorType.SINGULARITY


class DecompositionError(EstimationError, ArithmeticError):
    error_type = ErrorType.DECOMPOSITION


class ConditioningError(EstimationError, ArithmeticError):
    """協方差矩陣出現明顯負特徵值"""

    error_type = ErrorType.CONDITIONING


class InversionError(EstimationError, ArithmeticError):
    error_type = ErrorType.INVERSION


class ConfigError(EstimationError, ValueError):
    error_type = ErrorType.CONFIGURATION


class ErrorHandler:
    """統一錯誤處理器"""

    # 錯誤類型到用戶友好信息的映射
    _ERROR_MESSAGES = {
        ErrorType.DOMAIN: {
            "zh-TW": "輸入超出定義域",
            "en": "Input outside the valid domain",
        },
        ErrorType.SINGULARITY: {
            "zh-TW": "座標轉換遇到奇異點",
            "en": "Coordinate conversion hit a singular point",
        },
        ErrorType.DECOMPOSITION: {
            "zh-TW": "矩陣分解失敗",
            "en": "Matrix factorization failed",
        },
        ErrorType.CONDITIONING: {
            "zh-TW": "協方差矩陣不是半正定",
            "en": "Covariance matrix is not positive semidefinite",
        },
        ErrorType.INVERSION: {
            "zh-TW": "矩陣不可逆",
            "en": "Matrix is not invertible",
        },
        ErrorType.CONFIGURATION: {
            "zh-TW": "配置出現問題",
            "en": "Configuration issue",
        },
        ErrorType.FILE_IO: {
            "zh-TW": "文件讀寫出現問題",
            "en": "File read/write issue",
        },
        ErrorType.SYSTEM: {
            "zh-TW": "系統出現問題",
            "en": "System issue",
        },
    }

    # 錯誤解決建議
    _ERROR_SOLUTIONS = {
        ErrorType.SINGULARITY: {
            "zh-TW": ["檢查目標是否過於接近感測器", "確認初始距離設定為正值"],
            "en": [
                "Check whether the target passes too close to the sensor",
                "Verify the initial range settings are positive",
            ],
        },
        ErrorType.CONDITIONING: {
            "zh-TW": ["預測協方差相對量測雜訊過大", "考慮改用加性去偏模式"],
            "en": [
                "Predicted covariance dominates measurement noise",
                "Consider the additive debias mode",
            ],
        },
        ErrorType.DECOMPOSITION: {
            "zh-TW": ["檢查協方差矩陣是否對稱", "檢查雜訊標準差是否為正"],
            "en": [
                "Check the covariance matrix is symmetric",
                "Check the noise standard deviations are positive",
            ],
        },
        ErrorType.CONFIGURATION: {
            "zh-TW": ["檢查配置文件的鍵名與數值範圍", "使用 --help 查看可用選項"],
            "en": [
                "Check key names and value ranges in the config file",
                "Run with --help to list available options",
            ],
        },
        ErrorType.FILE_IO: {
            "zh-TW": ["檢查輸出目錄是否可寫", "檢查磁盤空間是否足夠"],
            "en": [
                "Check the output directory is writable",
                "Check available disk space",
            ],
        },
    }

    @staticmethod
    def get_current_language() -> str:
        """獲取當前語言設置"""
        language = os.getenv("PKF_LANGUAGE", "en")
        return language if language in ("zh-TW", "en") else "en"

    @staticmethod
    def get_error_message(error_type: ErrorType) -> str:
        language = ErrorHandler.get_current_language()
        messages = ErrorHandler._ERROR_MESSAGES.get(error_type, {})
        return messages.get(language, messages.get("en", "Unknown error"))

    @staticmethod
    def get_error_solutions(error_type: ErrorType) -> list[str]:
        """
        獲取錯誤解決建議

        Args:
            error_type: 錯誤類型

        Returns:
            list[str]: 解決建議列表
        """
        language = ErrorHandler.get_current_language()
        solutions = ErrorHandler._ERROR_SOLUTIONS.get(error_type, {})
        return list(solutions.get(language, solutions.get("en", [])))

    @staticmethod
    def classify_error(error: Exception) -> ErrorType:
        """
        根據異常類型自動分類錯誤

        Args:
            error: Python 異常對象

        Returns:
            ErrorType: 錯誤類型
        """
        if isinstance(error, EstimationError):
            return error.error_type

        error_name = type(error).__name__.lower()
        error_message = str(error).lower()

        # numpy / scipy 的線性代數錯誤
        if "linalgerror" in error_name:
            if "positive definite" in error_message:
                return ErrorType.DECOMPOSITION
            return ErrorType.INVERSION
        if "singular" in error_message:
            return ErrorType.INVERSION

        if isinstance(error, (FileNotFoundError, PermissionError, IsADirectoryError)):
            return ErrorType.FILE_IO
        if isinstance(error, OSError):
            return ErrorType.FILE_IO

        if "validation" in error_name:
            return ErrorType.CONFIGURATION

        if isinstance(error, (ZeroDivisionError, FloatingPointError)):
            return ErrorType.SINGULARITY
        if isinstance(error, ValueError):
            return ErrorType.DOMAIN

        return ErrorType.SYSTEM

    @staticmethod
    def format_user_error(
        error: Exception,
        error_type: ErrorType | None = None,
        context: dict[str, Any] | None = None,
        include_technical: bool = False,
    ) -> str:
        """
        將技術錯誤轉換為用戶友好的錯誤信息

        Args:
            error: Python 異常對象
            error_type: 錯誤類型（可選，會自動分類）
            context: 錯誤上下文信息
            include_technical: 是否包含技術細節

        Returns:
            str: 用戶友好的錯誤信息
        """
        if error_type is None:
            error_type = ErrorHandler.classify_error(error)

        language = ErrorHandler.get_current_language()
        parts = [ErrorHandler.get_error_message(error_type)]

        merged: dict[str, Any] = {}
        if isinstance(error, EstimationError):
            merged.update(error.context)
        if context:
            merged.update(context)

        if merged.get("operation"):
            label = "Operation" if language == "en" else "操作"
            parts.append(f"{label}: {merged['operation']}")
        if merged.get("file_path"):
            label = "File" if language == "en" else "文件"
            parts.append(f"{label}: {merged['file_path']}")

        if include_technical or isinstance(error, ConfigError):
            label = "Details" if language == "en" else "技術細節"
            parts.append(f"{label}: {error!s}")

        return "\n".join(parts)

    @staticmethod
    def log_error_with_context(
        error: Exception,
        context: dict[str, Any] | None = None,
        error_type: ErrorType | None = None,
        severity: ErrorSeverity = ErrorSeverity.MEDIUM,
    ) -> str:
        """
        記錄帶上下文的錯誤信息

        Args:
            error: Python 異常對象
            context: 錯誤上下文信息
            error_type: 錯誤類型
            severity: 錯誤嚴重程度

        Returns:
            str: 錯誤 ID，用於追蹤
        """
        error_id = f"ERR_{int(time.time())}_{id(error) % 10000}"

        if error_type is None:
            error_type = ErrorHandler.classify_error(error)

        debug_log(f"錯誤記錄 [{error_id}]: {error_type.value} - {error!s}")

        merged: dict[str, Any] = {}
        if isinstance(error, EstimationError):
            merged.update(error.context)
        if context:
            merged.update(context)
        if merged:
            debug_log(f"錯誤上下文 [{error_id}]: {merged}")

        # 對於嚴重錯誤，記錄完整堆棧跟蹤
        if severity in (ErrorSeverity.HIGH, ErrorSeverity.CRITICAL):
            debug_log(f"錯誤堆棧 [{error_id}]:\n{traceback.format_exc()}")

        return error_id

    @staticmethod
    def create_error_response(
        error: Exception,
        context: dict[str, Any] | None = None,
        error_type: ErrorType | None = None,
        include_solutions: bool = True,
    ) -> dict[str, Any]:
        """
        創建標準化的錯誤響應（試驗失敗記錄與 CLI 錯誤輸出共用）

        Args:
            error: Python 異常對象
            context: 錯誤上下文
            error_type: 錯誤類型
            include_solutions: 是否包含解決建議

        Returns:
            dict[str, Any]: 標準化錯誤響應
        """
        if error_type is None:
            error_type = ErrorHandler.classify_error(error)

        error_id = ErrorHandler.log_error_with_context(error, context, error_type)

        response: dict[str, Any] = {
            "success": False,
            "error_id": error_id,
            "error_type": error_type.value,
            "message": ErrorHandler.format_user_error(error, error_type, context),
            "detail": str(error),
        }

        if include_solutions:
            response["solutions"] = ErrorHandler.get_error_solutions(error_type)

        if context:
            response["context"] = dict(context)

        return response
