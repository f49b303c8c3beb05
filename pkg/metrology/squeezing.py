"""
Модуль метрологических характеристик: параметр сжатия Вайнленда ξ², угол минимальной
дисперсии и глубина запутанности по критерию Сёренсена–Мёлмера.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, NamedTuple, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from spin_core import SpinExpectations

from .exceptions import ConstraintInfeasibleError, UndefinedContrastError

logger = logging.getLogger(__name__)

DEGENERACY_TOLERANCE = 1e-9
BISECTION_TOLERANCE = 1e-8


def to_db(ratio: float) -> float:
    """Отношение дисперсий в децибелах: 10·log10(ratio)."""
    return float(10.0 * np.log10(ratio))


def from_db(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


class QuadratureMinimum(NamedTuple):
    theta_min: float
    min_variance: float
    degenerate: bool


@dataclass(frozen=True)
class SqueezingReport:
    """
    Сводка по сжатию.

    xi_squared = N·ΔS²_min/⟨Sx⟩², ⟨Sx⟩ = C·N/2.
    """

    n_atoms: float
    theta_min: float
    min_variance: float
    contrast: float
    xi_squared: float
    xi_squared_db: float
    normalized_variance_db: float
    depth: int

    def as_rows(self) -> List[Tuple[str, str]]:
        """Пары ключ-значение в фиксированном порядке (для текстового вывода и CSV)."""
        return [
            ("n_atoms", f"{self.n_atoms:.3f}"),
            ("theta_min_deg", f"{np.degrees(self.theta_min):.4f}"),
            ("min_variance", f"{self.min_variance:.6f}"),
            ("normalized_variance_db", f"{self.normalized_variance_db:.4f}"),
            ("contrast", f"{self.contrast:.6f}"),
            ("xi_squared", f"{self.xi_squared:.6f}"),
            ("xi_squared_db", f"{self.xi_squared_db:.4f}"),
            ("depth", str(self.depth)),
        ]


@dataclass(frozen=True)
class DepthCurve:
    """Минимальная нормированная дисперсия F_j(x) = min ΔJz²/j при ⟨Jx⟩ = x·j."""

    j: float
    samples: List[Tuple[float, float]]


def _covariance(source: Union[SpinExpectations, np.ndarray]) -> np.ndarray:
    if isinstance(source, SpinExpectations):
        return np.asarray(source.cov_yz, dtype=float)
    return np.asarray(source, dtype=float)


def min_variance_angle(exp: Union[SpinExpectations, np.ndarray]) -> QuadratureMinimum:
    """
    Наименьшая дисперсия S_θ = cos θ Sz - sin θ Sy в плоскости yz.

    ΔS_θ² = a + r·cos(2θ - α), поэтому минимум достигается при 2θ = α + π.

    Args:
        exp: SpinExpectations или матрица ковариации (Sy, Sz)

    Returns:
        QuadratureMinimum с θ_min в [-π/2, π/2)
    """
    cov = _covariance(exp)
    var_y, var_z, cov_yz = cov[0, 0], cov[1, 1], cov[0, 1]
    mean = 0.5 * (var_y + var_z)
    half_diff = 0.5 * (var_z - var_y)
    radius = float(np.hypot(half_diff, cov_yz))
    if radius <= DEGENERACY_TOLERANCE * max(abs(mean), 1.0):
        return QuadratureMinimum(0.0, float(mean), True)
    alpha = np.arctan2(-cov_yz, half_diff)
    theta = 0.5 * (alpha + np.pi)
    theta = (theta + np.pi / 2) % np.pi - np.pi / 2
    return QuadratureMinimum(float(theta), float(mean - radius), False)


def squeezing_parameter(n_atoms: float, min_variance: float, mean_sx: float) -> float:
    """ξ² = N·ΔS²_min/⟨Sx⟩²."""
    if mean_sx == 0:
        raise UndefinedContrastError("⟨Sx⟩ = 0, параметр сжатия не определён")
    return float(n_atoms * min_variance / mean_sx ** 2)


def oat_min_variance(n_atoms: int, twist: float) -> float:
    """
    Аналитическая минимальная поперечная дисперсия после одноосного скручивания
    когерентного состояния вдоль x на угол μ = ∫χdt.
    """
    if n_atoms < 2:
        return n_atoms / 4.0
    s = n_atoms / 2.0
    var_y = s / 2 + s / 2 * (s - 0.5) * (1 - np.cos(2 * twist) ** (n_atoms - 2))
    var_z = s / 2
    a = var_y - var_z
    b = 2 * s * (s - 0.5) * np.sin(twist) * np.cos(twist) ** (n_atoms - 2)
    return float(0.5 * (var_y + var_z - np.sqrt(a * a + b * b)))


@lru_cache(maxsize=64)
def _spin_matrices(j: float) -> Tuple[np.ndarray, np.ndarray]:
    m = np.arange(-j, j + 0.5, 1.0)
    ladder = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jx = np.diag(ladder / 2.0, 1) + np.diag(ladder / 2.0, -1)
    return m, jx


def _ground_moments(j: float, shift: float, mu: float) -> Tuple[float, float]:
    """⟨Jx⟩ и ⟨(Jz - shift)²⟩ в основном состоянии (Jz - shift)² - μJx."""
    m, jx = _spin_matrices(j)
    hamiltonian = np.diag((m - shift) ** 2) - mu * jx
    _, vectors = np.linalg.eigh(hamiltonian)
    ground = vectors[:, 0]
    return float(ground @ jx @ ground), float(np.dot(ground ** 2, (m - shift) ** 2))


def _constrained_value(j: float, x: float, shift: float) -> float:
    target = x * j
    mu_low = 1e-12
    jx_low, value_low = _ground_moments(j, shift, mu_low)
    if jx_low >= target - BISECTION_TOLERANCE * j:
        # ограничение уже выполнено без поля; большее ⟨Jx⟩ не нужно
        return value_low if abs(jx_low - target) <= BISECTION_TOLERANCE * j else np.inf
    mu_high = 1.0
    while _ground_moments(j, shift, mu_high)[0] < target:
        mu_high *= 2.0
        if mu_high > 1e12:
            return np.inf
    mu = brentq(
        lambda value: _ground_moments(j, shift, value)[0] - target,
        mu_low, mu_high, xtol=1e-14, rtol=1e-12,
    )
    return _ground_moments(j, shift, mu)[1]


@lru_cache(maxsize=4096)
def curve_value(j: float, x: float) -> float:
    """
    F_j(x): минимум ΔJz²/j по состояниям спина j с ⟨Jx⟩ = x·j.

    Дисперсия равна min по ζ от ⟨(Jz - ζ)²⟩, а для фиксированного ζ минимум при
    ограничении на ⟨Jx⟩ даёт основное состояние (Jz - ζ)² - μJx с μ >= 0.
    При ζ = 0 это кривые Сёренсена–Мёлмера; ζ ≠ 0 нужен для полуцелых j
    при малых x (например, j = 1/2 даёт F = x²/2).
    """
    if not 0.0 <= x <= 1.0:
        raise ConstraintInfeasibleError(f"x = {x} вне [0, 1]")
    if 2 * j != int(round(2 * j)) or j <= 0:
        raise ConstraintInfeasibleError(f"j = {j} не является положительным полуцелым")
    if x >= 1.0 - BISECTION_TOLERANCE:
        return 0.5
    shifts = np.linspace(0.0, j, 21)
    values = [_constrained_value(j, x, shift) for shift in shifts]
    best = int(np.argmin(values))
    if not np.isfinite(values[best]):
        raise ConstraintInfeasibleError(f"Не удалось достичь ⟨Jx⟩ = {x}·j при j = {j}")
    step = shifts[1] - shifts[0]
    low, high = max(0.0, shifts[best] - step), min(j, shifts[best] + step)
    refined = minimize_scalar(
        lambda shift: _constrained_value(j, x, shift),
        bounds=(low, high), method="bounded", options={"xatol": 1e-10},
    )
    value = min(values[best], float(refined.fun)) if np.isfinite(refined.fun) else values[best]
    return float(value / j)


def depth_curve(j: float, x_grid: Sequence[float]) -> DepthCurve:
    """Кривая F_j(x) на заданной сетке x ⊂ [0, 1]."""
    return DepthCurve(j=j, samples=[(float(x), curve_value(j, float(x))) for x in x_grid])


def entanglement_depth(n_atoms: float, min_variance: float, mean_sx: float, max_depth: int = 200) -> int:
    """
    Доказанная глубина запутанности k.

    Для состояний из кластеров не более чем по 2j атомов
    4ΔS²/N >= 2·F_j(C), C = 2|⟨Sx⟩|/N: каждый кластер есть спин j,
    кластеров N/2j, и выпуклость F_j переносит оценку на сумму.
    Возвращается наименьшее k, для которого точка не лежит ниже кривой j = k/2.
    """
    if mean_sx == 0:
        raise UndefinedContrastError("⟨Sx⟩ = 0, глубина запутанности не определена")
    contrast = min(1.0, 2.0 * abs(mean_sx) / n_atoms)
    normalized = 4.0 * min_variance / n_atoms
    for depth in range(1, max_depth + 1):
        bound = 2.0 * curve_value(depth / 2.0, contrast)
        if normalized >= bound - 1e-12:
            return depth
    logger.warning("Глубина запутанности превышает max_depth=%d", max_depth)
    return max_depth


def squeezing_report(n_atoms: float, min_variance: float, contrast: float, theta_min: float = 0.0) -> SqueezingReport:
    """
    Собирает SqueezingReport из измеренной минимальной дисперсии и контраста Рамсея.
    """
    mean_sx = contrast * n_atoms / 2.0
    xi_squared = squeezing_parameter(n_atoms, min_variance, mean_sx)
    normalized = 4.0 * min_variance / n_atoms
    return SqueezingReport(
        n_atoms=float(n_atoms),
        theta_min=float(theta_min),
        min_variance=float(min_variance),
        contrast=float(contrast),
        xi_squared=xi_squared,
        xi_squared_db=to_db(xi_squared),
        normalized_variance_db=to_db(normalized),
        depth=entanglement_depth(n_atoms, min_variance, mean_sx),
    )
