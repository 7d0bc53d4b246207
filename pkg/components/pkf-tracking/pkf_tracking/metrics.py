#!/usr/bin/env python3
"""
評估指標
========

ANEES 與卡方信賴帶、MSE 與其常態近似區間、失追判定與二項區間，
以及把一批試驗記錄聚合成每個濾波器的 MetricsSeries。

分量選擇器使用 0 起算的索引：位置為 (0, 1)，速度為 (2, 3)。
"""

from collections.abc import Sequence

import numpy as np
from scipy import stats

from .models import MetricsSeries, TrialRecord
from .utils.error_handler import DomainError, InversionError
from .utils.linalg import solve


STATE_DIMENSION = 4
POSITION = (0, 1)
VELOCITY = (2, 3)

DEFAULT_LEVEL = 0.95
DEFAULT_LOSS_THRESHOLD = 1000.0  # 公尺
DEFAULT_LOSS_WINDOW = 10  # 最後幾次更新


def normalized_errors(errors: np.ndarray, covariances: np.ndarray) -> np.ndarray:
    """每個試驗的 eᵗ P⁻¹ e"""
    errors = np.asarray(errors, dtype=float).reshape(-1, STATE_DIMENSION)
    covariances = np.asarray(covariances, dtype=float).reshape(
        -1, STATE_DIMENSION, STATE_DIMENSION
    )
    try:
        weighted = np.linalg.solve(covariances, errors[..., None])[..., 0]
    except np.linalg.LinAlgError:
        # 逐一求解以找出是哪一個試驗
        weighted = np.empty_like(errors)
        for index, (e, P) in enumerate(zip(errors, covariances, strict=True)):
            weighted[index] = solve(P, e, {"operation": "anees", "trial": index})
    return np.einsum("ij,ij->i", errors, weighted)


def anees(errors: Sequence[np.ndarray], covariances: Sequence[np.ndarray]) -> float:
    """
    平均正規化估計誤差平方 (1/(N·L)) Σ eᵗ P⁻¹ e

    Raises:
        DomainError: 空輸入或長度不一致
        InversionError: 某個協方差奇異（上下文帶有試驗索引）
    """
    errors = np.asarray(errors, dtype=float).reshape(-1, STATE_DIMENSION)
    covariances = np.asarray(covariances, dtype=float).reshape(
        -1, STATE_DIMENSION, STATE_DIMENSION
    )
    L = errors.shape[0]
    if L == 0 or covariances.shape[0] != L:
        raise DomainError(
            f"anees needs matching non-empty inputs ({L} errors, {covariances.shape[0]} covariances)",
            {"operation": "anees"},
        )
    return float(normalized_errors(errors, covariances).sum() / (STATE_DIMENSION * L))


def anees_confidence(N: int, L: int, level: float = DEFAULT_LEVEL) -> tuple[float, float]:
    """N·L·ψ ~ χ²(N·L) 的雙尾區間，除以 N·L"""
    dof = N * L
    if dof < 1:
        raise DomainError(f"N·L must be at least 1, got {dof}", {"operation": "anees_confidence"})
    lo, hi = stats.chi2.ppf([(1.0 - level) / 2.0, (1.0 + level) / 2.0], dof)
    return float(lo / dof), float(hi / dof)


def mse(errors: Sequence[np.ndarray], selector: Sequence[int]) -> float:
    """(1/L) Σ ‖H_S e‖²，H_S 取 selector 指定的分量"""
    selector = tuple(selector)
    if not selector:
        raise DomainError("component selector is empty", {"operation": "mse"})
    errors = np.asarray(errors, dtype=float).reshape(-1, STATE_DIMENSION)
    return float(np.mean(np.sum(errors[:, selector] ** 2, axis=1)))


def track_lost(
    trial: TrialRecord,
    filter_id: str,
    threshold: float = DEFAULT_LOSS_THRESHOLD,
    window: int = DEFAULT_LOSS_WINDOW,
) -> bool:
    """
    失追判定

    數值失敗，或最後 window 次更新的位置誤差全部超過 threshold，即視為失追。
    """
    if trial.failed(filter_id):
        return True
    errors = trial.errors(filter_id)
    if errors.shape[0] <= 1:
        return False
    tail = errors[1:][-window:]
    return bool(np.all(np.hypot(tail[:, 0], tail[:, 1]) > threshold))


def _round_half_up(value: float) -> int:
    return int(np.floor(value + 0.5))


def loss_confidence(losses: int, L: int, level: float = DEFAULT_LEVEL) -> tuple[int, int] | None:
    """
    失追次數的常態近似二項區間 L·(p̂ ± z·√(p̂(1−p̂)/L))，四捨五入成整數

    沒有任何失追時回傳 None。
    """
    if not 0 <= losses <= L:
        raise DomainError(f"losses {losses} outside 0..{L}", {"operation": "loss_confidence"})
    if losses == 0:
        return None
    p = losses / L
    z = stats.norm.ppf((1.0 + level) / 2.0)
    half = z * np.sqrt(p * (1.0 - p) / L)
    return max(0, _round_half_up(L * (p - half))), min(L, _round_half_up(L * (p + half)))


def mse_confidence(
    squared_errors: Sequence[float], level: float = DEFAULT_LEVEL
) -> tuple[float, float] | None:
    """均值 ± z·s/√L 的常態近似區間；空輸入回傳 None"""
    values = np.asarray(squared_errors, dtype=float).reshape(-1)
    if values.size == 0:
        return None
    mean = float(values.mean())
    if values.size == 1:
        return mean, mean
    half = stats.norm.ppf((1.0 + level) / 2.0) * values.std(ddof=1) / np.sqrt(values.size)
    return mean - float(half), mean + float(half)


def _padded(records: Sequence[TrialRecord], filter_name: str, n: int):
    """(L, n+1, 4) 誤差與 (L, n+1, 4, 4) 協方差；失敗後的步驟為 NaN"""
    L = len(records)
    errors = np.full((L, n + 1, STATE_DIMENSION), np.nan)
    covariances = np.full((L, n + 1, STATE_DIMENSION, STATE_DIMENSION), np.nan)
    for index, record in enumerate(records):
        e = record.errors(filter_name)
        errors[index, : e.shape[0]] = e
        covariances[index, : e.shape[0]] = record.covariances(filter_name)
    return errors, covariances


def aggregate(
    records: Sequence[TrialRecord],
    filters: Sequence[str],
    level: float = DEFAULT_LEVEL,
    loss_threshold: float = DEFAULT_LOSS_THRESHOLD,
    loss_window: int = DEFAULT_LOSS_WINDOW,
    anees_excludes_lost: bool = False,
) -> dict[str, MetricsSeries]:
    """
    把試驗記錄聚合成每個濾波器的指標序列

    - ANEES 取在 k 時仍有估計的試驗；anees_excludes_lost 時再排除失追試驗
    - MSE 與其區間只用未失追的試驗
    - PCRLB 為所有試驗的平均

    Args:
        records: 依試驗編號排序的記錄
        filters: 濾波器名稱
        level: 信賴水準
        loss_threshold: 失追門檻（公尺）
        loss_window: 失追判定所看的最後更新次數
        anees_excludes_lost: ANEES 是否排除失追試驗

    Returns:
        dict[str, MetricsSeries]: 以濾波器名稱為鍵
    """
    if not records:
        raise DomainError("no trial records to aggregate", {"operation": "aggregate"})

    n = records[0].n_updates
    ks = np.arange(1, n + 1)
    L = len(records)
    pcrlb_pos = np.mean([r.pcrlb_pos for r in records], axis=0)[1:]
    pcrlb_vel = np.mean([r.pcrlb_vel for r in records], axis=0)[1:]

    result: dict[str, MetricsSeries] = {}
    for name in filters:
        lost = np.array([track_lost(r, name, loss_threshold, loss_window) for r in records])
        errors, covariances = _padded(records, name, n)

        anees_values = np.full(n, np.nan)
        anees_lo = np.full(n, np.nan)
        anees_hi = np.full(n, np.nan)
        mse_arrays = {
            key: np.full(n, np.nan)
            for key in ("pos", "pos_lo", "pos_hi", "vel", "vel_lo", "vel_hi")
        }

        for i, k in enumerate(ks):
            available = ~np.isnan(errors[:, k, 0])
            if anees_excludes_lost:
                available &= ~lost
            count = int(available.sum())
            if count:
                try:
                    anees_values[i] = anees(errors[available, k], covariances[available, k])
                except InversionError:
                    anees_values[i] = np.nan
                anees_lo[i], anees_hi[i] = anees_confidence(STATE_DIMENSION, count, level)

            kept = errors[~lost, k]
            for label, selector in (("pos", POSITION), ("vel", VELOCITY)):
                squared = np.sum(kept[:, selector] ** 2, axis=1)
                interval = mse_confidence(squared, level)
                if interval is None:
                    continue
                mse_arrays[label][i] = float(squared.mean())
                mse_arrays[f"{label}_lo"][i], mse_arrays[f"{label}_hi"][i] = interval

        losses = int(lost.sum())
        result[name] = MetricsSeries(
            filter=name,
            k=ks,
            anees=anees_values,
            anees_lo=anees_lo,
            anees_hi=anees_hi,
            mse_pos=mse_arrays["pos"],
            mse_pos_lo=mse_arrays["pos_lo"],
            mse_pos_hi=mse_arrays["pos_hi"],
            mse_vel=mse_arrays["vel"],
            mse_vel_lo=mse_arrays["vel_lo"],
            mse_vel_hi=mse_arrays["vel_hi"],
            pcrlb_pos=pcrlb_pos,
            pcrlb_vel=pcrlb_vel,
            trials=L,
            lost=losses,
            loss_ci=loss_confidence(losses, L, level),
        )
    return result
