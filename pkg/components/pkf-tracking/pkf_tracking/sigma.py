#!/usr/bin/env python3
"""
Sigma 點轉換
============

五階完全對稱 Gauss 積分規則（2n² + 1 點）與對應的加權樣本統計。

規則點以標準常態座標表示：
- 原點，權重 2/(n+2)
- ±√(n+2)·e_i，權重 (4−n)/(2(n+2)²)
- √((n+2)/2)·(±e_i ± e_j)，i < j，權重 1/(n+2)²

對 N(0, I) 而言，所有總次數 ≤ 5 的單項式都被精確積分。
"""

from collections.abc import Callable
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from .coordmap import CoordinateMapPair, as_state_vector
from .debug import filter_debug_log
from .utils.error_handler import DomainError
from .utils.linalg import psd_violation, robust_cholesky, symmetrize


@dataclass(frozen=True)
class SigmaRule:
    """不可變的積分規則；可在多個執行緒之間共用"""

    n: int
    points: np.ndarray  # (S, n)
    weights: np.ndarray  # (S,)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def scaled_points(self, mean: np.ndarray, covariance: np.ndarray) -> np.ndarray:
        """以協方差的 Cholesky 因子縮放旋轉規則點，再平移到 mean"""
        L = robust_cholesky(covariance, {"operation": "sigma_points"})
        return np.asarray(mean, dtype=float) + self.points @ L.T

    def moment(self, exponents) -> float:
        """規則對單項式 ∏ u_i^{e_i} 的積分"""
        exponents = np.asarray(exponents, dtype=int)
        return float(self.weights @ np.prod(self.points**exponents, axis=1))


@lru_cache(maxsize=8)
def generate_rule(n: int) -> SigmaRule:
    """
    產生 n 維五階完全對稱規則

    Args:
        n: 維度，至少為 1

    Returns:
        SigmaRule: 2n² + 1 個點的規則

    Raises:
        DomainError: n < 1
    """
    if n < 1:
        raise DomainError(f"rule dimension must be at least 1, got {n}", {"operation": "generate_rule"})

    scale_axis = np.sqrt(n + 2.0)
    scale_pair = np.sqrt((n + 2.0) / 2.0)

    points = [np.zeros(n)]
    weights = [2.0 / (n + 2.0)]

    axis_weight = (4.0 - n) / (2.0 * (n + 2.0) ** 2)
    for i in range(n):
        for sign in (1.0, -1.0):
            point = np.zeros(n)
            point[i] = sign * scale_axis
            points.append(point)
            weights.append(axis_weight)

    pair_weight = 1.0 / (n + 2.0) ** 2
    for i, j in combinations(range(n), 2):
        for si, sj in product((1.0, -1.0), repeat=2):
            point = np.zeros(n)
            point[i] = si * scale_pair
            point[j] = sj * scale_pair
            points.append(point)
            weights.append(pair_weight)

    point_array = np.array(points)
    weight_array = np.array(weights)
    point_array.setflags(write=False)
    weight_array.setflags(write=False)
    return SigmaRule(n=n, points=point_array, weights=weight_array)


@dataclass(frozen=True)
class TransformedStats:
    """轉換後 sigma 點的加權樣本均值與協方差"""

    mean: np.ndarray
    covariance: np.ndarray
    # 最小特徵值低於 −1e-9·trace 時記下該值（不截斷）
    psd_violation: float | None = None


def transform(
    rule: SigmaRule,
    mean: np.ndarray,
    covariance: np.ndarray,
    y: Callable[[np.ndarray], np.ndarray],
    batched: bool = True,
) -> TransformedStats:
    """
    以 sigma 點近似 y(u)，u ~ N(mean, covariance) 的均值與協方差

    Args:
        rule: 積分規則，維度需與 mean 一致
        mean: 輸入均值
        covariance: 輸入協方差（半正定）
        y: 非線性函數
        batched: True 時 y 一次接收 (S, n) 陣列；否則逐點呼叫

    Returns:
        TransformedStats: 加權樣本均值與對稱化後的協方差

    Raises:
        DecompositionError: 協方差分解失敗
    """
    mean = np.asarray(mean, dtype=float)
    if mean.shape[0] != rule.n:
        raise DomainError(
            f"rule dimension {rule.n} does not match mean dimension {mean.shape[0]}",
            {"operation": "transform"},
        )

    points = rule.scaled_points(mean, covariance)
    if batched:
        images = np.asarray(y(points), dtype=float)
    else:
        images = np.stack([np.asarray(y(p), dtype=float) for p in points])

    w = rule.weights
    out_mean = w @ images
    deviations = images - out_mean
    out_cov = symmetrize((deviations.T * w) @ deviations)

    violation = psd_violation(out_cov)
    if violation is not None:
        filter_debug_log(f"sigma 點協方差出現負特徵值 {violation:.3e}")
    return TransformedStats(mean=out_mean, covariance=out_cov, psd_violation=violation)


def expectations_of_converted(
    predicted_state: np.ndarray,
    cov_u: np.ndarray,
    coord_map: CoordinateMapPair,
    rule: SigmaRule | None = None,
) -> TransformedStats:
    """
    計算 y(u) = g(h(x̂) − u)，u ~ N(0, cov_u) 的統計量

    cov_u = P_z 時對應預測誤差，cov_u = P_z + R_z 時對應合併誤差。
    落到 g 定義域之外的點由映射的 to_principal 處理（極座標為反射）。

    Raises:
        SingularityError: 預測狀態或某個 sigma 點落在奇異點
    """
    x_hat = as_state_vector(predicted_state)
    rule = rule or generate_rule(coord_map.dimension)
    center = coord_map.h(x_hat)

    def converted(u: np.ndarray) -> np.ndarray:
        return coord_map.g(coord_map.to_principal(center - u))

    return transform(rule, np.zeros(coord_map.dimension), cov_u, converted)
