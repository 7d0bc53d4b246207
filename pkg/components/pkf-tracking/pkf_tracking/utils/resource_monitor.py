#!/usr/bin/env python3
"""
運行資源監控
============

為蒙地卡羅實驗提供：
- 依物理核心數與 PKF_THREADS 決定工作執行緒數
- 實驗前後的進程／系統內存快照
- 寫入 run_info.json 的運行摘要（不影響 CSV 的確定性）
"""

import gc
import os
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime

import psutil

from ..debug import debug_log
from .error_handler import ErrorHandler, ErrorType


@dataclass
class MemorySnapshot:
    """內存快照數據類"""

    timestamp: str
    system_total: int  # 系統總內存 (bytes)
    system_available: int  # 系統可用內存 (bytes)
    system_percent: float  # 系統內存使用率 (%)
    process_rss: int  # 進程常駐內存 (bytes)
    process_vms: int  # 進程虛擬內存 (bytes)
    gc_objects: int  # Python 垃圾回收對象數量


@dataclass
class RunInfo:
    """單次實驗的運行摘要"""

    workers: int
    trials: int
    started: MemorySnapshot | None = None
    finished: MemorySnapshot | None = None
    wall_time_seconds: float = 0.0
    cpu_physical: int | None = None
    cpu_logical: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def default_worker_count(requested: int | None = None) -> int:
    """
    決定工作執行緒數

    明確指定時直接使用；否則取物理核心數，並以 PKF_THREADS 為上限。

    Args:
        requested: 命令列指定的執行緒數（可選）

    Returns:
        int: 至少為 1 的執行緒數
    """
    physical = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1

    cap = None
    env_value = os.getenv("PKF_THREADS")
    if env_value:
        try:
            cap = max(1, int(env_value))
        except ValueError:
            debug_log(f"忽略無效的 PKF_THREADS: {env_value!r}")

    if requested is not None:
        return max(1, int(requested))
    return max(1, min(physical, cap) if cap is not None else physical)


def take_snapshot() -> MemorySnapshot | None:
    """收集內存快照；失敗時記錄錯誤並回傳 None"""
    try:
        system_memory = psutil.virtual_memory()
        process_memory = psutil.Process().memory_info()
        return MemorySnapshot(
            timestamp=datetime.now().isoformat(timespec="seconds"),
            system_total=system_memory.total,
            system_available=system_memory.available,
            system_percent=system_memory.percent,
            process_rss=process_memory.rss,
            process_vms=process_memory.vms,
            gc_objects=len(gc.get_objects()),
        )
    except Exception as e:
        error_id = ErrorHandler.log_error_with_context(
            e, context={"operation": "收集內存快照"}, error_type=ErrorType.SYSTEM
        )
        debug_log(f"收集內存快照失敗 [錯誤ID: {error_id}]: {e}")
        return None


class RunMonitor:
    """
    包住一次實驗的上下文管理器

    使用方式：
        with RunMonitor(workers, trials) as monitor:
            ...
        monitor.info  # RunInfo
    """

    def __init__(self, workers: int, trials: int):
        self.info = RunInfo(
            workers=workers,
            trials=trials,
            cpu_physical=psutil.cpu_count(logical=False),
            cpu_logical=psutil.cpu_count(),
        )
        self._start = 0.0

    def __enter__(self) -> "RunMonitor":
        self._start = time.perf_counter()
        self.info.started = take_snapshot()
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.info.wall_time_seconds = time.perf_counter() - self._start
        self.info.finished = take_snapshot()
        if self.info.started and self.info.finished:
            growth = self.info.finished.process_rss - self.info.started.process_rss
            debug_log(
                f"實驗結束：{self.info.trials} 次試驗，{self.info.workers} 執行緒，"
                f"耗時 {self.info.wall_time_seconds:.2f}s，RSS 變化 {growth / 1024 / 1024:.1f}MB"
            )
