#!/usr/bin/env python3
"""
座標映射
========

狀態空間（笛卡兒）與完整量測空間之間的雙射 (h, g)，包括：
- 通用的 CoordinateMapPair 介面與觀測／未觀測分割
- 極座標 ↔ 笛卡兒座標的具體實作及其解析 Jacobian
- 純線性的笛卡兒量測映射（線性基準模型使用）

所有映射都接受 (..., N) 形狀的陣列，可一次處理整批 sigma 點；
Jacobian 只針對單點計算。方位角一律落在 (−π, π]。
"""

from abc import ABC, abstractmethod

import numpy as np

from .models import CartesianState, PolarState, StateEstimate
from .utils.error_handler import DomainError, SingularityError


def wrap_angle(angle):
    """把角度折回 (−π, π]"""
    return np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), 2.0 * np.pi)


def reflect_polar(z: np.ndarray) -> np.ndarray:
    """
    將負距離的極座標點反射到雙覆蓋的另一葉

    (r, α, ṙ, ċ) → (−r, α+π, −ṙ, −ċ)，笛卡兒像不變。r == 0 無法反射。

    Raises:
        SingularityError: 任一點的距離恰為零
    """
    z = np.array(z, dtype=float, copy=True)
    points = z.reshape(-1, z.shape[-1])
    r = points[:, 0]
    if np.any(r == 0.0):
        raise SingularityError("polar point at the origin", {"operation": "reflect_polar"})
    negative = r < 0.0
    if np.any(negative):
        flipped = points[negative]
        flipped[:, [0, 2, 3]] *= -1.0
        flipped[:, 1] = wrap_angle(flipped[:, 1] + np.pi)
        points[negative] = flipped
    return points.reshape(z.shape)


def _polar_to_cartesian_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    r, alpha, rdot, cdot = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    if np.any(r <= 0.0):
        raise DomainError(
            f"range must be positive (min {float(np.min(r)):.6g})",
            {"operation": "polar_to_cartesian"},
        )
    c, s = np.cos(alpha), np.sin(alpha)
    return np.stack([r * c, r * s, rdot * c - cdot * s, rdot * s + cdot * c], axis=-1)


def _cartesian_to_polar_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    px, py, vx, vy = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    r = np.hypot(px, py)
    if np.any(r == 0.0):
        raise SingularityError(
            "position at the sensor origin has no bearing", {"operation": "cartesian_to_polar"}
        )
    return np.stack(
        [r, np.arctan2(py, px), (px * vx + py * vy) / r, (px * vy - py * vx) / r], axis=-1
    )


def as_state_vector(value) -> np.ndarray:
    """接受具名狀態、StateEstimate 或陣列，回傳浮點向量"""
    if isinstance(value, (PolarState, CartesianState)):
        return value.as_array()
    if isinstance(value, StateEstimate):
        return value.mean
    return np.asarray(value, dtype=float)


def polar_to_cartesian(z: PolarState) -> CartesianState:
    """
    g：完整極座標量測 → 笛卡兒狀態

    Raises:
        DomainError: r ≤ 0
    """
    return CartesianState.from_array(_polar_to_cartesian_array(as_state_vector(z)))


def cartesian_to_polar(x: CartesianState) -> PolarState:
    """
    h：笛卡兒狀態 → 完整極座標量測

    Raises:
        SingularityError: 位置在原點
    """
    return PolarState.from_array(_cartesian_to_polar_array(as_state_vector(x)))


def jacobian_g(z: PolarState) -> np.ndarray:
    """g 在 z 的 Jacobian；行列式等於 r"""
    r, alpha, rdot, cdot = as_state_vector(z)
    c, s = np.cos(alpha), np.sin(alpha)
    return np.array(
        [
            [c, -r * s, 0.0, 0.0],
            [s, r * c, 0.0, 0.0],
            [0.0, -rdot * s - cdot * c, c, -s],
            [0.0, rdot * c - cdot * s, s, c],
        ]
    )


def jacobian_g_inverse(z: PolarState) -> np.ndarray:
    """
    g 的 Jacobian 之逆，等於 h 在 g(z) 的 Jacobian

    Raises:
        SingularityError: r == 0
    """
    r, alpha, rdot, cdot = as_state_vector(z)
    if r == 0.0:
        raise SingularityError("Jacobian of g is singular at r = 0", {"operation": "jacobian_g_inverse"})
    c, s = np.cos(alpha), np.sin(alpha)
    return np.array(
        [
            [c, s, 0.0, 0.0],
            [-s / r, c / r, 0.0, 0.0],
            [-cdot * s / r, cdot * c / r, c, s],
            [rdot * s / r, -rdot * c / r, -s, c],
        ]
    )


def partition_inverse_transpose(
    J_g_inv: np.ndarray, M: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    將 J_g⁻ᵗ 依觀測數 M 分割成四個區塊

    Args:
        J_g_inv: J_g⁻¹（N×N）
        M: 觀測分量數，1 ≤ M ≤ N

    Returns:
        (J⁻ᵗ_{g,m}, J⁻ᵗ_{g,mu}, J⁻ᵗ_{g,um}, J⁻ᵗ_{g,u})；M = N 時後三者為空陣列
    """
    n = J_g_inv.shape[0]
    if not 1 <= M <= n:
        raise DomainError(f"observed count {M} outside 1..{n}", {"operation": "partition"})
    Jt = np.asarray(J_g_inv, dtype=float).T
    return Jt[:M, :M], Jt[:M, M:], Jt[M:, :M], Jt[M:, M:]


class CoordinateMapPair(ABC):
    """
    狀態空間與完整量測空間之間的雙射

    子類別提供 h、g 與兩個 Jacobian；其餘操作（分割、殘差、量測 Jacobian）
    在此以通用方式實作。
    """

    dimension: int = 4
    # 需要折回 (−π, π] 的量測分量索引
    angular_indices: tuple[int, ...] = ()

    def __init__(self, observed_count: int | None = None):
        M = self.dimension if observed_count is None else int(observed_count)
        if not 1 <= M <= self.dimension:
            raise DomainError(
                f"observed count {M} outside 1..{self.dimension}", {"operation": "map"}
            )
        self.observed_count = M

    @abstractmethod
    def h(self, x: np.ndarray) -> np.ndarray:
        """狀態 → 完整量測"""

    @abstractmethod
    def g(self, z: np.ndarray) -> np.ndarray:
        """完整量測 → 狀態"""

    @abstractmethod
    def jacobian_g(self, z: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def jacobian_g_inverse(self, z: np.ndarray) -> np.ndarray: ...

    def h_m(self, x: np.ndarray, M: int | None = None) -> np.ndarray:
        return self.h(x)[..., : self._m(M)]

    def h_u(self, x: np.ndarray, M: int | None = None) -> np.ndarray:
        return self.h(x)[..., self._m(M) :]

    def jacobian_h(self, x: np.ndarray) -> np.ndarray:
        """J_h(x) = J_g⁻¹(h(x))"""
        return self.jacobian_g_inverse(self.h(x))

    def measurement_jacobian(self, x: np.ndarray, M: int | None = None) -> np.ndarray:
        return self.jacobian_h(x)[: self._m(M)]

    def residual(self, z_a: np.ndarray, z_b: np.ndarray) -> np.ndarray:
        """z_a − z_b，角度分量折回主值區間"""
        diff = np.asarray(z_a, dtype=float) - np.asarray(z_b, dtype=float)
        width = diff.shape[-1]
        for index in self.angular_indices:
            if index < width:
                diff[..., index] = wrap_angle(diff[..., index])
        return diff

    def to_principal(self, z: np.ndarray) -> np.ndarray:
        """把量測點送回 g 的定義域；預設不做任何事"""
        return np.asarray(z, dtype=float)

    def closed_form_debias(self, R_z: np.ndarray) -> np.ndarray | None:
        """映射專屬的解析乘性去偏矩陣；沒有時回傳 None"""
        return None

    def _m(self, M: int | None) -> int:
        return self.observed_count if M is None else M


class PolarMeasurementMap(CoordinateMapPair):
    """固定於原點的感測器：(x, y, ẋ, ẏ) ↔ (r, α, ṙ, ċ)"""

    angular_indices = (1,)

    def h(self, x: np.ndarray) -> np.ndarray:
        return _cartesian_to_polar_array(x)

    def g(self, z: np.ndarray) -> np.ndarray:
        return _polar_to_cartesian_array(z)

    def jacobian_g(self, z: np.ndarray) -> np.ndarray:
        return jacobian_g(z)

    def jacobian_g_inverse(self, z: np.ndarray) -> np.ndarray:
        return jacobian_g_inverse(z)

    def to_principal(self, z: np.ndarray) -> np.ndarray:
        return reflect_polar(z)

    def closed_form_debias(self, R_z: np.ndarray) -> np.ndarray:
        # E[cos(α + w)] = e^{−σ_α²/2} cos α，對 g 的每個分量成立
        sigma_alpha_sq = float(np.asarray(R_z)[1, 1])
        return np.exp(0.5 * sigma_alpha_sq) * np.eye(self.dimension)


class CartesianMeasurementMap(CoordinateMapPair):
    """恆等映射：感測器直接量測笛卡兒狀態（線性基準模型）"""

    def h(self, x: np.ndarray) -> np.ndarray:
        return np.array(x, dtype=float, copy=True)

    def g(self, z: np.ndarray) -> np.ndarray:
        return np.array(z, dtype=float, copy=True)

    def jacobian_g(self, z: np.ndarray) -> np.ndarray:
        return np.eye(self.dimension)

    def jacobian_g_inverse(self, z: np.ndarray) -> np.ndarray:
        return np.eye(self.dimension)

    def closed_form_debias(self, R_z: np.ndarray) -> np.ndarray:
        return np.eye(self.dimension)
