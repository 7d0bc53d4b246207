#!/usr/bin/env python3
"""
實驗調度
========

以執行緒池平行執行試驗，依試驗編號收集記錄後確定性地聚合，並輸出：
- metrics.csv：每個 k、每個濾波器的 ANEES / MSE / PCRLB 序列
- summary.csv：每個濾波器的失追次數與區間
- config.txt：解析後的配置
- run_info.json：資源快照與耗時（不屬於確定性輸出）

數值一律以 9 位有效數字輸出，換行為 LF；相同種子與配置產生逐位元相同的 CSV，
與執行緒數無關。
"""

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .debug import experiment_debug_log
from .metrics import aggregate
from .models import MetricsSeries, TrialRecord
from .sigma import generate_rule
from .sim import run_trial
from .utils.resource_monitor import RunInfo, RunMonitor, default_worker_count


METRICS_COLUMNS = (
    "k",
    "filter",
    "anees",
    "anees_lo",
    "anees_hi",
    "mse_pos",
    "mse_pos_lo",
    "mse_pos_hi",
    "mse_vel",
    "mse_vel_lo",
    "mse_vel_hi",
    "pcrlb_pos",
    "pcrlb_vel",
)
SUMMARY_COLUMNS = ("filter", "trials", "lost", "loss_ci_lo", "loss_ci_hi")

# 多次實驗之間的種子間距
EXPERIMENT_SEED_STRIDE = 7919


@dataclass
class ExperimentOutcome:
    """單次實驗的結果"""

    index: int
    seed: int
    output_dir: Path
    metrics: dict[str, MetricsSeries]
    run_info: RunInfo


def format_number(value) -> str:
    """9 位有效數字；NaN 與 None 輸出為空欄位"""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if np.isnan(value):
        return ""
    return f"{value:.9g}"


def run_trials(
    config: ExperimentConfig, seed: int, workers: int
) -> list[TrialRecord]:
    """執行所有試驗，回傳依試驗編號排序的記錄"""
    rule = generate_rule(4)
    progress_step = max(1, config.trials // 10)

    def work(trial_index: int) -> TrialRecord:
        record = run_trial(trial_index, config, rule, seed)
        if (trial_index + 1) % progress_step == 0:
            experiment_debug_log(f"試驗進度 {trial_index + 1}/{config.trials}")
        return record

    if workers <= 1:
        return [work(i) for i in range(config.trials)]
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="pkf-trial") as pool:
        return list(pool.map(work, range(config.trials)))


def write_metrics_csv(path: Path, metrics: dict[str, MetricsSeries]) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        series_list = list(metrics.values())
        if not series_list:
            return
        for i, k in enumerate(series_list[0].k):
            for series in series_list:
                writer.writerow(
                    [
                        format_number(int(k)),
                        series.filter,
                        *(
                            format_number(getattr(series, column)[i])
                            for column in METRICS_COLUMNS[2:]
                        ),
                    ]
                )


def write_summary_csv(path: Path, metrics: dict[str, MetricsSeries]) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for series in metrics.values():
            lo, hi = series.loss_ci if series.loss_ci is not None else (None, None)
            writer.writerow(
                [
                    series.filter,
                    format_number(series.trials),
                    format_number(series.lost),
                    format_number(lo),
                    format_number(hi),
                ]
            )


def run_single_experiment(
    config: ExperimentConfig,
    seed: int,
    output_dir: Path,
    workers: int,
    index: int = 0,
) -> ExperimentOutcome:
    """
    執行一次實驗並寫出所有輸出文件

    Args:
        config: 實驗配置
        seed: 本次實驗的根種子
        output_dir: 輸出目錄（會自動建立）
        workers: 工作執行緒數
        index: 實驗編號

    Returns:
        ExperimentOutcome: 指標與運行摘要
    """
    output_dir.mkdir(parents=True, exist_ok=True)
    experiment_debug_log(
        f"實驗 {index}：seed={seed}，{config.trials} 次試驗，濾波器 {','.join(config.filters)}"
    )

    with RunMonitor(workers, config.trials) as monitor:
        records = run_trials(config, seed, workers)
        metrics = aggregate(
            records,
            config.filters,
            level=config.confidence_level,
            loss_threshold=config.track_loss_threshold,
            loss_window=config.track_loss_window,
            anees_excludes_lost=config.anees_excludes_lost,
        )

    monitor.info.extra = {
        "seed": seed,
        "experiment": index,
        "lost": {name: series.lost for name, series in metrics.items()},
    }

    write_metrics_csv(output_dir / "metrics.csv", metrics)
    write_summary_csv(output_dir / "summary.csv", metrics)
    (output_dir / "config.txt").write_text(config.to_text(), encoding="utf-8", newline="\n")
    (output_dir / "run_info.json").write_text(
        json.dumps(monitor.info.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )

    return ExperimentOutcome(
        index=index, seed=seed, output_dir=output_dir, metrics=metrics, run_info=monitor.info
    )


def run_experiment(config: ExperimentConfig) -> list[ExperimentOutcome]:
    """
    執行配置中的所有實驗

    實驗 e 的種子為 seed + 7919·e；多於一次實驗時，各自寫入 exp_<e>/ 子目錄。

    Args:
        config: 驗證後的實驗配置

    Returns:
        list[ExperimentOutcome]: 依實驗編號排序
    """
    workers = default_worker_count(config.threads)
    root = Path(config.output_dir)
    outcomes = []
    for index in range(config.experiments):
        seed = config.seed + EXPERIMENT_SEED_STRIDE * index
        output_dir = root / f"exp_{index}" if config.experiments > 1 else root
        outcomes.append(run_single_experiment(config, seed, output_dir, workers, index))
    return outcomes
