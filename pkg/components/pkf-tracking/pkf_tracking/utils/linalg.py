"""
小型稠密矩陣工具
================

狀態維度固定且很小（N = 4），所有分解都直接呼叫 scipy.linalg。
提供：
- 對稱化與數值半正定檢查
- 帶抖動遞增的 Cholesky 分解
- 一般方陣的 LU 求解（帶奇異檢測）
- 對稱正定矩陣的 Cholesky 求解與求逆
"""

from typing import Any

import numpy as np
import scipy.linalg as sp_linalg

from .error_handler import ConditioningError, DecompositionError, InversionError


# Cholesky 失敗時依序嘗試的抖動（乘以 trace / n）
CHOLESKY_JITTERS = (0.0, 1e-12, 1e-10, 1e-8)

# 負特徵值容忍度（相對 trace）
PSD_TOLERANCE = 1e-9
PSD_FLOOR = 1e-12


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def robust_cholesky(covariance: np.ndarray, context: dict[str, Any] | None = None) -> np.ndarray:
    """
    下三角 Cholesky 因子，失敗時逐級加入對角抖動

    Args:
        covariance: 對稱半正定矩陣
        context: 失敗時附加到例外的上下文

    Returns:
        np.ndarray: 下三角因子 L，滿足 L L^t ≈ covariance

    Raises:
        DecompositionError: 所有抖動等級都失敗
    """
    covariance = symmetrize(np.asarray(covariance, dtype=float))
    n = covariance.shape[0]
    trace = float(np.trace(covariance))

    if not np.all(np.isfinite(covariance)):
        raise DecompositionError("covariance has non-finite entries", context)
    # 零矩陣的平方根就是零矩陣
    if trace == 0.0 and not np.any(covariance):
        return np.zeros_like(covariance)

    scale = abs(trace) / n
    for jitter in CHOLESKY_JITTERS:
        try:
            return sp_linalg.cholesky(
                covariance + jitter * scale * np.eye(n), lower=True, check_finite=False
            )
        except np.linalg.LinAlgError:
            continue

    eigenvalues = np.linalg.eigvalsh(covariance)
    raise DecompositionError(
        f"Cholesky failed after jitter escalation (min eigenvalue {eigenvalues[0]:.3e}, "
        f"trace {trace:.3e})",
        {**(context or {}), "min_eigenvalue": float(eigenvalues[0]), "trace": trace},
    )


def psd_violation(matrix: np.ndarray, tolerance: float = PSD_TOLERANCE) -> float | None:
    """
    回傳低於 -tolerance·trace 的最小特徵值；數值上半正定時回傳 None
    """
    matrix = symmetrize(matrix)
    eigenvalues = np.linalg.eigvalsh(matrix)
    scale = max(abs(float(np.trace(matrix))), np.finfo(float).tiny)
    if eigenvalues[0] < -tolerance * scale:
        return float(eigenvalues[0])
    return None


def enforce_psd(
    matrix: np.ndarray,
    tolerance: float = PSD_TOLERANCE,
    floor: float = PSD_FLOOR,
    context: dict[str, Any] | None = None,
) -> np.ndarray:
    """
    對稱化並檢查數值半正定

    介於 [-tolerance·trace, 0) 的特徵值抬升到 floor·trace；
    更負的特徵值代表條件不良，直接失敗而不是截斷。

    Raises:
        ConditioningError: 出現明顯負特徵值
    """
    matrix = symmetrize(np.asarray(matrix, dtype=float))
    eigenvalues, vectors = np.linalg.eigh(matrix)
    trace = float(np.trace(matrix))
    scale = max(abs(trace), np.finfo(float).tiny)

    if eigenvalues[0] < -tolerance * scale:
        raise ConditioningError(
            f"matrix is not PSD: min eigenvalue {eigenvalues[0]:.6e} < "
            f"-{tolerance:g}·trace ({trace:.6e})",
            {
                **(context or {}),
                "eigenvalues": [float(v) for v in eigenvalues],
                "trace": trace,
            },
        )

    if eigenvalues[0] < 0.0:
        eigenvalues = np.where(eigenvalues < 0.0, floor * scale, eigenvalues)
        matrix = symmetrize((vectors * eigenvalues) @ vectors.T)
    return matrix


def solve(a: np.ndarray, b: np.ndarray, context: dict[str, Any] | None = None) -> np.ndarray:
    """
    以部分主元 LU 求解 a x = b

    Raises:
        InversionError: a 在數值上奇異
    """
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise InversionError("matrix has non-finite entries", context)

    lu, piv = sp_linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= np.finfo(float).eps * a.shape[0] * max(pivots.max(), np.finfo(float).tiny):
        raise InversionError(
            f"matrix is singular to working precision (smallest pivot {pivots.min():.3e})",
            {**(context or {}), "smallest_pivot": float(pivots.min())},
        )
    return sp_linalg.lu_solve((lu, piv), b, check_finite=False)


def spd_solve(a: np.ndarray, b: np.ndarray, context: dict[str, Any] | None = None) -> np.ndarray:
    """
    以 Cholesky 分解求解對稱正定系統 a x = b

    只在分解本身失敗時視為奇異，分量尺度的差距不影響判定。

    Raises:
        InversionError: a 含非有限值或不是數值正定
    """
    a = symmetrize(np.asarray(a, dtype=float))
    if not np.all(np.isfinite(a)):
        raise InversionError("matrix has non-finite entries", context)
    try:
        factor = sp_linalg.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise InversionError(f"matrix is not positive definite: {e}", context) from e
    return sp_linalg.cho_solve(factor, b, check_finite=False)


def spd_invert(a: np.ndarray, context: dict[str, Any] | None = None) -> np.ndarray:
    return symmetrize(spd_solve(a, np.eye(np.asarray(a).shape[0]), context))
