"""
Статистика томограммы: коррекция дрейфа фильтром Савицкого–Голея, вычитание шума
изображения, нормированная дисперсия ΔS_θ² по углам и калибровка числа атомов.
"""

import io
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import savgol_filter

from .exceptions import FitError, InsufficientDataError
from .records import ImagingNoiseSpec, ShotRecord, atomic_write_text, group_by_theta

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 300
DEFAULT_ORDER = 2
DRIFT_RANGE_DEG = (90.0, 360.0)
TOMOGRAM_COLUMNS = ("theta_deg", "n_shots", "var_raw", "var_corr", "norm_db", "stderr_db")


@dataclass(frozen=True)
class TomogramRow:
    theta: float
    n_shots: int
    variance_raw: float
    variance_corrected: float
    normalized_db: float
    standard_error: float
    negative: bool = False


@dataclass(frozen=True)
class Tomogram:
    """Нормированная дисперсия Δ_n S_θ² = 4ΔS_θ²/⟨N⟩ по углам."""

    rows: List[TomogramRow]
    mean_atoms: float

    @property
    def thetas(self) -> np.ndarray:
        return np.array([row.theta for row in self.rows])

    @property
    def normalized_db(self) -> np.ndarray:
        return np.array([row.normalized_db for row in self.rows])

    def minimum(self) -> TomogramRow:
        """Строка с наименьшей нормированной дисперсией (строки без значения пропускаются)."""
        valid = [row for row in self.rows if np.isfinite(row.normalized_db)]
        if not valid:
            raise InsufficientDataError("В томограмме нет строк с конечной дисперсией")
        return min(valid, key=lambda row: row.normalized_db)

    def row_at(self, theta: float, tolerance: float = 1e-9) -> TomogramRow:
        for row in self.rows:
            if abs(row.theta - theta) <= tolerance:
                return row
        raise KeyError(f"Нет строки для θ = {np.degrees(theta):.4f}°")


@dataclass(frozen=True)
class CalibrationFit:
    """
    Результат подгонки ΔSz² = aN + bN².

    rescale = a/(1/4): множитель, приводящий наклон к проекционному шуму 1/4.
    slope_through_origin: наклон подгонки ΔSz² = cN.
    """

    a: float
    b: float
    rescale: float
    a_stderr: float
    b_stderr: float
    slope_through_origin: float
    slope_stderr: float


def _odd_window(window: int) -> int:
    return window if window % 2 == 1 else window + 1


def drift_correct(records: Sequence[ShotRecord], window: int = DEFAULT_WINDOW, order: int = DEFAULT_ORDER) -> List[ShotRecord]:
    """
    Убирает медленный дрейф n1 - n0 внутри серии одного угла.

    Из ряда вычитается его сглаживание фильтром Савицкого–Голея, затем ряд
    возвращается к исходному среднему. Полное число атомов каждого выстрела не меняется.

    Args:
        records: выстрелы одного θ в порядке shot_index
        window: ширина окна (чётная увеличивается на 1)
        order: порядок полинома

    Returns:
        Скорректированные выстрелы в том же порядке
    """
    window = _odd_window(window)
    if order >= window:
        raise ValueError(f"Порядок полинома {order} должен быть меньше окна {window}")
    records = list(records)
    if not records:
        return []
    difference = np.array([record.n1 - record.n0 for record in records])
    if len(records) < window:
        logger.warning(
            "Выстрелов (%d) меньше окна фильтра (%d): коррекция дрейфа не применяется", len(records), window,
        )
        return records
    smoothed = savgol_filter(difference, window, order, mode="interp")
    corrected = difference - smoothed + np.mean(difference)
    return [
        replace(record, n0=0.5 * (record.total - value), n1=0.5 * (record.total + value))
        for record, value in zip(records, corrected)
    ]


def subtract_imaging_noise(variance_sz: float, spec: ImagingNoiseSpec) -> Tuple[float, bool]:
    """
    ΔSz²_corr = ΔSz² - (σ0² + σ1²)/4.

    Returns:
        (исправленная дисперсия, флаг отрицательного результата)
    """
    if variance_sz < 0:
        raise ValueError(f"Дисперсия отрицательна: {variance_sz}")
    corrected = variance_sz - spec.sz_variance
    return corrected, corrected < 0


def _in_drift_range(theta: float, drift_range: Optional[Tuple[float, float]]) -> bool:
    if drift_range is None:
        return False
    degrees = float(np.degrees(theta)) % 360.0
    low, high = drift_range
    return low < degrees < high


def tomogram(
    records: Sequence[ShotRecord],
    mean_atoms: Optional[float] = None,
    imaging: Optional[ImagingNoiseSpec] = None,
    drift_range: Optional[Tuple[float, float]] = DRIFT_RANGE_DEG,
    window: int = DEFAULT_WINDOW,
    order: int = DEFAULT_ORDER,
) -> Tomogram:
    """
    Нормированная дисперсия по углам томографии.

    Для каждого θ: коррекция дрейфа (только для θ в drift_range, в градусах,
    границы не включаются), выборочная дисперсия Sz = (n1 - n0)/2, вычитание шума
    изображения, Δ_n = 4ΔS²_corr/⟨N⟩ и 10·log10(Δ_n). Стандартная ошибка
    в дБ считается в предположении нормального распределения.

    Args:
        records: все выстрелы
        mean_atoms: ⟨N⟩, по умолчанию среднее по всем выстрелам
        imaging: параметры шума изображения для вычитания
        drift_range: диапазон углов для коррекции дрейфа или None
        window, order: параметры фильтра

    Returns:
        Tomogram

    Raises:
        InsufficientDataError: меньше двух выстрелов для какого-либо θ
    """
    records = list(records)
    if not records:
        raise InsufficientDataError("Нет выстрелов")
    imaging = imaging or ImagingNoiseSpec()
    if mean_atoms is None:
        mean_atoms = float(np.mean([record.total for record in records]))
    if mean_atoms <= 0:
        raise ValueError(f"⟨N⟩ должно быть > 0: {mean_atoms}")

    rows = []
    for theta, group in group_by_theta(records):
        if len(group) < 2:
            raise InsufficientDataError(f"Для θ = {np.degrees(theta):.4f}° меньше двух выстрелов")
        if _in_drift_range(theta, drift_range):
            group = drift_correct(group, window, order)
        sz = np.array([record.sz for record in group])
        variance = float(np.var(sz, ddof=1))
        corrected, negative = subtract_imaging_noise(variance, imaging)
        normalized = 4.0 * corrected / mean_atoms
        standard_error = variance * np.sqrt(2.0 / (len(group) - 1))
        if negative or corrected == 0:
            logger.warning(
                "θ = %.4f°: дисперсия после вычитания шума изображения неположительна (%.3f)",
                np.degrees(theta), corrected,
            )
            normalized_db = float("nan")
            stderr_db = float("nan")
        else:
            normalized_db = float(10.0 * np.log10(normalized))
            stderr_db = float(10.0 / np.log(10.0) * standard_error / corrected)
        rows.append(TomogramRow(
            theta=float(theta),
            n_shots=len(group),
            variance_raw=variance,
            variance_corrected=float(corrected),
            normalized_db=normalized_db,
            standard_error=stderr_db,
            negative=bool(negative),
        ))
    return Tomogram(rows=rows, mean_atoms=float(mean_atoms))


def calibration_fit(variance_by_n: Sequence[Tuple[float, float]]) -> CalibrationFit:
    """
    Подгонка ΔSz² = aN + bN² методом наименьших квадратов.

    Args:
        variance_by_n: пары (N, ΔSz²), не менее трёх различных N

    Returns:
        CalibrationFit

    Raises:
        FitError: меньше трёх различных N или вырожденная матрица плана
    """
    data = np.asarray(variance_by_n, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise FitError("Ожидались пары (N, ΔSz²)")
    counts, variances = data[:, 0], data[:, 1]
    if np.unique(counts).size < 3:
        raise FitError(f"Нужно не менее трёх различных N, получено {np.unique(counts).size}")

    design = np.column_stack([counts, counts ** 2])
    coefficients, _, rank, _ = np.linalg.lstsq(design, variances, rcond=None)
    if rank < 2:
        raise FitError("Матрица плана вырождена")
    a, b = coefficients
    dof = len(counts) - 2
    residuals = variances - design @ coefficients
    sigma2 = float(residuals @ residuals) / dof
    covariance = sigma2 * np.linalg.inv(design.T @ design)

    slope = float(counts @ variances / (counts @ counts))
    slope_residuals = variances - slope * counts
    slope_sigma2 = float(slope_residuals @ slope_residuals) / (len(counts) - 1)
    slope_stderr = float(np.sqrt(slope_sigma2 / (counts @ counts)))

    fit = CalibrationFit(
        a=float(a),
        b=float(b),
        rescale=float(a / 0.25),
        a_stderr=float(np.sqrt(covariance[0, 0])),
        b_stderr=float(np.sqrt(covariance[1, 1])),
        slope_through_origin=slope,
        slope_stderr=slope_stderr,
    )
    logger.info("Калибровка: a = %.4f ± %.4f, b = %.3e ± %.3e", fit.a, fit.a_stderr, fit.b, fit.b_stderr)
    return fit


def format_tomogram_csv(result: Tomogram) -> str:
    buffer = io.StringIO()
    buffer.write(",".join(TOMOGRAM_COLUMNS) + "\n")
    for row in result.rows:
        buffer.write(
            f"{np.degrees(row.theta):.6f},{row.n_shots},{row.variance_raw:.6f},"
            f"{row.variance_corrected:.6f},{row.normalized_db:.4f},{row.standard_error:.4f}\n"
        )
    return buffer.getvalue()


def write_tomogram_csv(path: str, result: Tomogram) -> None:
    atomic_write_text(path, format_tomogram_csv(result))
