"""
Томографическая реконструкция функции Вигнера W(Sy, Sz) по маргиналам S_θ.

S_θ = cos θ Sz - sin θ Sy, углы θ ∈ [-90°, 90°]. Сфера Блоха локально заменяется
касательной плоскостью, поэтому задача сводится к обратному преобразованию Радона
(фильтрованная обратная проекция).
"""

import io
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import UnivariateSpline
from scipy.ndimage import map_coordinates
from skimage.measure import find_contours, points_in_poly
from skimage.transform import iradon, radon

from tomography import ShotRecord, atomic_write_text, group_by_theta

from .exceptions import ContourClippedError, InsufficientDataError

logger = logging.getLogger(__name__)

MIN_SAMPLES = 30
MIN_ANGLES = 8
INVERSE_SQRT_E = float(np.exp(-0.5))
FILTERS = {"ram-lak": "ramp", "hann": "hann"}


@dataclass(frozen=True)
class Marginal:
    """Сглаженная плотность S_θ на равномерной оси s, нормированная на 1."""

    theta: float
    s_axis: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        if self.s_axis.shape != self.density.shape:
            raise ValueError("Оси и плотность разной длины")
        if np.any(self.density < 0):
            raise ValueError("Плотность отрицательна")

    @property
    def mean(self) -> float:
        return float(trapezoid(self.s_axis * self.density, self.s_axis))

    @property
    def variance(self) -> float:
        return float(trapezoid((self.s_axis - self.mean) ** 2 * self.density, self.s_axis))


@dataclass(frozen=True)
class ProjectionSet:
    """Маргиналы по строго возрастающим углам."""

    marginals: List[Marginal]

    def __post_init__(self):
        angles = self.angles
        if angles.size and np.any(np.diff(angles) <= 0):
            raise ValueError("Углы проекций должны строго возрастать")

    @property
    def angles(self) -> np.ndarray:
        return np.array([marginal.theta for marginal in self.marginals])

    def __len__(self) -> int:
        return len(self.marginals)


@dataclass(frozen=True)
class WignerGrid:
    """
    Значения W на равномерной сетке; values имеет форму (len(sz_axis), len(sy_axis)).
    """

    sy_axis: np.ndarray
    sz_axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.sz_axis.size, self.sy_axis.size):
            raise ValueError(f"Форма values {self.values.shape} не совпадает с осями")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("W содержит нечисловые значения")

    @property
    def integral(self) -> float:
        return float(trapezoid(trapezoid(self.values, self.sy_axis, axis=1), self.sz_axis))

    def moments(self) -> Tuple[float, float, float]:
        """Вторые центральные моменты (⟨ΔSy²⟩, ⟨ΔSz²⟩, ⟨ΔSyΔSz⟩) с весом W."""
        total = self.integral
        sz, sy = np.meshgrid(self.sz_axis, self.sy_axis, indexing="ij")

        def average(values: np.ndarray) -> float:
            return float(trapezoid(trapezoid(values * self.values, self.sy_axis, axis=1), self.sz_axis)) / total

        mean_y, mean_z = average(sy), average(sz)
        return (
            average((sy - mean_y) ** 2),
            average((sz - mean_z) ** 2),
            average((sy - mean_y) * (sz - mean_z)),
        )


@dataclass(frozen=True)
class ContourResult:
    level: float
    polyline: np.ndarray
    enclosed_area: float


def _normalized(s_axis: np.ndarray, density: np.ndarray) -> np.ndarray:
    density = np.clip(density, 0.0, None)
    norm = trapezoid(density, s_axis)
    if norm <= 0:
        raise InsufficientDataError("Сглаженная плотность тождественно равна нулю")
    return density / norm


def smooth_histogram(samples: Sequence[float], s_axis: np.ndarray, theta: float = 0.0) -> Marginal:
    """
    Гладкая оценка плотности выборки S_θ.

    Гистограмма с шириной интервала по правилу Фридмана–Диакониса, затем сглаживающий
    кубический сплайн с весами пуассоновских ошибок; отрицательные значения обнуляются,
    результат нормируется на 1 на оси s_axis.

    Args:
        samples: измеренные значения S_θ
        s_axis: равномерная ось, на которой возвращается плотность
        theta: угол, к которому относится выборка

    Raises:
        InsufficientDataError: меньше 30 отсчётов
    """
    samples = np.asarray(samples, dtype=float)
    s_axis = np.asarray(s_axis, dtype=float)
    if samples.size < MIN_SAMPLES:
        raise InsufficientDataError(f"Нужно не менее {MIN_SAMPLES} отсчётов, получено {samples.size}")
    step = s_axis[1] - s_axis[0]

    if np.ptp(samples) == 0:
        value = samples[0]
        density = np.interp(s_axis, [value - step, value, value + step], [0.0, 1.0, 0.0], left=0.0, right=0.0)
        return Marginal(theta=theta, s_axis=s_axis, density=_normalized(s_axis, density))

    edges = np.histogram_bin_edges(samples, bins="fd")
    counts, edges = np.histogram(samples, bins=edges)
    widths = np.diff(edges)
    centers = 0.5 * (edges[1:] + edges[:-1])
    density = counts / (samples.size * widths)
    errors = np.sqrt(np.maximum(counts, 1)) / (samples.size * widths)

    if centers.size >= 4:
        spline = UnivariateSpline(centers, density, w=1.0 / errors, k=3, s=float(centers.size), ext=1)
        smoothed = spline(s_axis)
    else:
        smoothed = np.interp(s_axis, centers, density, left=0.0, right=0.0)
    inside = (s_axis >= edges[0]) & (s_axis <= edges[-1])
    smoothed = np.where(inside, smoothed, 0.0)
    return Marginal(theta=theta, s_axis=s_axis, density=_normalized(s_axis, smoothed))


def _square_step(grid: WignerGrid) -> float:
    dy = float(grid.sy_axis[1] - grid.sy_axis[0])
    dz = float(grid.sz_axis[1] - grid.sz_axis[0])
    if not np.isclose(dy, dz, rtol=1e-9):
        raise ValueError(f"Шаги сетки по Sy ({dy}) и Sz ({dz}) должны совпадать")
    return dy


def forward_radon(grid: WignerGrid, angles: Sequence[float], s_axis: Optional[np.ndarray] = None) -> ProjectionSet:
    """
    Прямое преобразование Радона: интегралы W вдоль линий S_θ = s.

    Строки изображения для skimage соответствуют Sy, столбцы Sz; при такой
    раскладке координата детектора skimage совпадает с S_θ = cos θ Sz - sin θ Sy.

    Args:
        grid: функция на сетке с одинаковым шагом по обеим осям
        angles: углы θ (рад), строго возрастающие
        s_axis: ось s (по умолчанию ось детектора с шагом сетки)

    Returns:
        ProjectionSet с нормированными маргиналами
    """
    step = _square_step(grid)
    angles = np.asarray(angles, dtype=float)
    sinogram = radon(grid.values.T, theta=np.degrees(angles), circle=False, preserve_range=True)

    # центр детектора skimage приходится на узел (len // 2) каждой оси
    center_y = grid.sy_axis[grid.sy_axis.size // 2]
    center_z = grid.sz_axis[grid.sz_axis.size // 2]
    detector = step * (np.arange(sinogram.shape[0]) - sinogram.shape[0] // 2)

    marginals = []
    for theta, column in zip(angles, sinogram.T):
        native = detector + np.cos(theta) * center_z - np.sin(theta) * center_y
        projection = column * step
        if s_axis is None:
            axis = native
        else:
            axis = np.asarray(s_axis, dtype=float)
            projection = np.interp(axis, native, projection, left=0.0, right=0.0)
        marginals.append(Marginal(theta=float(theta), s_axis=axis, density=_normalized(axis, projection)))
    return ProjectionSet(marginals=marginals)


def _angle_weights(angles: np.ndarray) -> np.ndarray:
    """Веса квадратуры по θ на окружности периода π."""
    wrapped = np.mod(angles, np.pi)
    order = np.argsort(wrapped, kind="stable")
    ordered = wrapped[order]
    gaps = np.diff(np.concatenate([ordered, [ordered[0] + np.pi]]))
    previous = np.roll(gaps, 1)
    weights = np.empty_like(angles)
    weights[order] = 0.5 * (gaps + previous)
    return weights


def inverse_radon(
    projections: ProjectionSet,
    sy_axis: np.ndarray,
    sz_axis: np.ndarray,
    filter_name: str = "hann",
) -> WignerGrid:
    """
    Фильтрованная обратная проекция (skimage.transform.iradon).

    Маргиналы переводятся на общую ось s с нулём в центре детектора. iradon
    даёт каждому углу вес π/n, поэтому столбцы синограммы заранее умножаются
    на отношение веса угла на окружности периода π к этому значению. Результат
    с пиксельной сетки шага s пересчитывается на оси sy_axis, sz_axis.

    Args:
        projections: маргиналы
        sy_axis, sz_axis: равномерные оси результата
        filter_name: "ram-lak" или "hann"

    Returns:
        WignerGrid
    """
    if filter_name not in FILTERS:
        raise ValueError(f"Неизвестный фильтр {filter_name!r}, допустимы {tuple(FILTERS)}")
    if len(projections) == 0:
        raise InsufficientDataError("Нет проекций")
    if len(projections) < MIN_ANGLES:
        logger.warning("Всего %d углов (< %d): обратная задача плохо обусловлена", len(projections), MIN_ANGLES)

    step = min(float(marginal.s_axis[1] - marginal.s_axis[0]) for marginal in projections.marginals)
    reach = max(float(np.max(np.abs(marginal.s_axis))) for marginal in projections.marginals)
    count = int(np.ceil(reach / step))
    s_axis = step * np.arange(-count, count + 1)
    sinogram = np.column_stack([
        np.interp(s_axis, marginal.s_axis, marginal.density, left=0.0, right=0.0)
        for marginal in projections.marginals
    ])

    angles = projections.angles
    scale = _angle_weights(angles) * len(angles) / np.pi
    sy_axis = np.asarray(sy_axis, dtype=float)
    sz_axis = np.asarray(sz_axis, dtype=float)
    radius = int(np.ceil(max(np.max(np.abs(sy_axis)), np.max(np.abs(sz_axis))) / step)) + 1
    image = iradon(
        sinogram * scale / step,
        theta=np.degrees(angles),
        output_size=2 * radius + 1,
        filter_name=FILTERS[filter_name],
        interpolation="linear",
        circle=False,
    )

    # строки image соответствуют Sy, столбцы Sz, центр в узле radius
    sz, sy = np.meshgrid(sz_axis, sy_axis, indexing="ij")
    values = map_coordinates(image, [sy / step + radius, sz / step + radius], order=1, mode="constant", cval=0.0)
    return WignerGrid(sy_axis=sy_axis, sz_axis=sz_axis, values=values)


def contour_at(grid: WignerGrid, fraction: float = INVERSE_SQRT_E) -> ContourResult:
    """
    Замкнутая линия уровня fraction·max W вокруг максимума и её площадь.

    Raises:
        ContourClippedError: линия вокруг максимума упирается в границу сетки
    """
    if not 0 < fraction < 1:
        raise ValueError(f"Доля уровня должна быть в (0, 1): {fraction}")
    peak = float(np.max(grid.values))
    if peak <= 0:
        raise ValueError("Максимум W неположителен")
    level = fraction * peak
    row, column = np.unravel_index(int(np.argmax(grid.values)), grid.values.shape)

    dy = grid.sy_axis[1] - grid.sy_axis[0]
    dz = grid.sz_axis[1] - grid.sz_axis[0]
    for contour in find_contours(grid.values, level):
        if not points_in_poly(np.array([[row, column]], dtype=float), contour)[0]:
            continue
        if not np.allclose(contour[0], contour[-1]):
            raise ContourClippedError(f"Линия уровня {fraction:.3f}·max не замкнута внутри сетки")
        polyline = np.column_stack([grid.sy_axis[0] + contour[:, 1] * dy, grid.sz_axis[0] + contour[:, 0] * dz])
        y, z = polyline[:, 0], polyline[:, 1]
        area = 0.5 * abs(float(np.dot(y[:-1], z[1:]) - np.dot(y[1:], z[:-1])))
        return ContourResult(level=level, polyline=polyline, enclosed_area=area)
    raise ContourClippedError(f"Нет замкнутой линии уровня {fraction:.3f}·max вокруг максимума")


def default_grid(n_atoms: float, points: int = 257) -> Tuple[np.ndarray, np.ndarray]:
    """Оси (Sy, Sz) из points узлов на ±4·sqrt(N)/2."""
    half = 4.0 * np.sqrt(n_atoms) / 2.0
    axis = np.linspace(-half, half, points)
    return axis, axis.copy()


def _wrap_angle(theta: float) -> Tuple[float, float]:
    """Приводит θ к [-π/2, π/2); второй элемент: знак S_θ после приведения."""
    shifted = (theta + np.pi / 2) % (2 * np.pi) - np.pi / 2
    if shifted >= np.pi / 2:
        return float(shifted - np.pi), -1.0
    return float(shifted), 1.0


def marginals_from_records(
    records: Sequence[ShotRecord], s_axis: Optional[np.ndarray] = None, points: int = 257,
) -> ProjectionSet:
    """
    Маргиналы по выстрелам: Sz = (n1 - n0)/2 каждого угла сглаживается smooth_histogram.

    Углы вне [-90°, 90°) переводятся в этот диапазон с отражением s → -s,
    совпавшие после приведения углы объединяются.
    """
    merged = {}
    for theta, group in group_by_theta(records):
        wrapped, sign = _wrap_angle(theta)
        key = round(wrapped, 12)
        merged.setdefault(key, (wrapped, []))[1].extend(sign * record.sz for record in group)
    if not merged:
        raise InsufficientDataError("Нет выстрелов")

    if s_axis is None:
        reach = 1.25 * max(max(abs(value) for value in samples) for _, samples in merged.values())
        s_axis = np.linspace(-reach, reach, points)
    marginals = [
        smooth_histogram(samples, s_axis, theta=wrapped)
        for wrapped, samples in (merged[key] for key in sorted(merged))
    ]
    return ProjectionSet(marginals=marginals)


def format_grid_csv(grid: WignerGrid) -> str:
    buffer = io.StringIO()
    buffer.write("sz\\sy," + ",".join(f"{value:.6e}" for value in grid.sy_axis) + "\n")
    for sz, row in zip(grid.sz_axis, grid.values):
        buffer.write(f"{sz:.6e}," + ",".join(f"{value:.6e}" for value in row) + "\n")
    return buffer.getvalue()


def format_grid_gnuplot(grid: WignerGrid) -> str:
    """Формат nonuniform matrix: первая строка содержит число столбцов и ось Sy, далее Sz и значения."""
    buffer = io.StringIO()
    buffer.write(f"{grid.sy_axis.size} " + " ".join(f"{value:.6e}" for value in grid.sy_axis) + "\n")
    for sz, row in zip(grid.sz_axis, grid.values):
        buffer.write(f"{sz:.6e} " + " ".join(f"{value:.6e}" for value in row) + "\n")
    return buffer.getvalue()


def format_contour_csv(contour: ContourResult) -> str:
    buffer = io.StringIO()
    buffer.write("sy,sz\n")
    for y, z in contour.polyline:
        buffer.write(f"{y:.6e},{z:.6e}\n")
    return buffer.getvalue()


def write_grid_csv(path: str, grid: WignerGrid) -> None:
    atomic_write_text(path, format_grid_csv(grid))


def write_grid_gnuplot(path: str, grid: WignerGrid) -> None:
    atomic_write_text(path, format_grid_gnuplot(grid))


def write_contour_csv(path: str, contour: ContourResult) -> None:
    atomic_write_text(path, format_contour_csv(contour))
