#!/usr/bin/env python3
"""
調試日誌
========

濾波器失敗與實驗進度等診斷訊息寫到 stderr，stdout 只留給命令列摘要。
PKF_DEBUG 為 true/1/yes/on 時才輸出；各模組使用帶前綴的包裝：[SIM]、[FILTER]、[EXPERIMENT]。
"""

import os
import sys
from typing import Any


_TRUTHY = ("true", "1", "yes", "on")


def debug_log(message: Any, prefix: str = "DEBUG") -> None:
    """
    輸出調試訊息到標準錯誤，避免污染標準輸出

    Args:
        message: 要輸出的調試信息
        prefix: 調試信息的前綴標識，默認為 "DEBUG"
    """
    if not is_debug_enabled():
        return

    try:
        if not isinstance(message, str):
            message = str(message)

        try:
            print(f"[{prefix}] {message}", file=sys.stderr, flush=True)
        except UnicodeEncodeError:
            # 編碼問題時退回 ASCII 安全模式
            safe_message = message.encode("ascii", errors="replace").decode("ascii")
            print(f"[{prefix}] {safe_message}", file=sys.stderr, flush=True)
    except Exception:
        # 靜默失敗，不影響主程序
        pass


def sim_debug_log(message: Any) -> None:
    """模擬模組專用的調試日誌"""
    debug_log(message, "SIM")


def filter_debug_log(message: Any) -> None:
    """濾波器模組專用的調試日誌"""
    debug_log(message, "FILTER")


def experiment_debug_log(message: Any) -> None:
    """實驗調度模組專用的調試日誌"""
    debug_log(message, "EXPERIMENT")


def is_debug_enabled() -> bool:
    """檢查是否啟用了調試模式"""
    return os.getenv("PKF_DEBUG", "").lower() in _TRUTHY


def set_debug_mode(enabled: bool) -> None:
    """設置調試模式（用於測試）"""
    os.environ["PKF_DEBUG"] = "true" if enabled else "false"
