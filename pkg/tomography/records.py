"""
Записи отдельных выстрелов: модель шума изображения, постселекция по числу атомов
и чтение/запись CSV со схемой `shot,theta_deg,n0,n1`.
"""

import csv
import io
import logging
import os
import tempfile
from dataclasses import dataclass, replace
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .exceptions import InsufficientDataError, RecordSchemaError

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ("shot", "theta_deg", "n0", "n1")


@dataclass(frozen=True)
class ShotRecord:
    """
    Один выстрел: угол томографии и измеренные числа атомов в двух состояниях.

    Args:
        shot_index: порядковый номер выстрела (используется для коррекции дрейфа)
        theta: угол поворота θ (рад)
        n0, n1: измеренные числа атомов (после шума изображения не целые)
    """

    shot_index: int
    theta: float
    n0: float
    n1: float

    def __post_init__(self):
        if not (np.isfinite(self.n0) and np.isfinite(self.n1) and np.isfinite(self.theta)):
            raise RecordSchemaError(f"Нечисловые значения в выстреле {self.shot_index}")

    @property
    def total(self) -> float:
        return self.n0 + self.n1

    @property
    def sz(self) -> float:
        """Sz = (n1 - n0)/2."""
        return 0.5 * (self.n1 - self.n0)


@dataclass(frozen=True)
class ImagingNoiseSpec:
    """
    Аддитивный гауссов шум счёта атомов от дробового шума фотонов.

    Args:
        sigma_n0, sigma_n1: с.к.о. в атомах
    """

    sigma_n0: float = 0.0
    sigma_n1: float = 0.0

    def __post_init__(self):
        if self.sigma_n0 < 0 or self.sigma_n1 < 0:
            raise ValueError(f"С.к.о. шума изображения отрицательно: {self.sigma_n0}, {self.sigma_n1}")

    @classmethod
    def from_combined(cls, combined: float) -> "ImagingNoiseSpec":
        """Равные σ0 = σ1, при которых sqrt(σ0² + σ1²)/2 = combined."""
        sigma = combined * np.sqrt(2.0)
        return cls(sigma_n0=sigma, sigma_n1=sigma)

    @property
    def combined(self) -> float:
        return float(np.sqrt(self.sigma_n0 ** 2 + self.sigma_n1 ** 2) / 2.0)

    @property
    def sz_variance(self) -> float:
        """Вклад в ΔSz²: (σ0² + σ1²)/4."""
        return (self.sigma_n0 ** 2 + self.sigma_n1 ** 2) / 4.0


def add_imaging_noise(record: ShotRecord, spec: ImagingNoiseSpec, seed) -> ShotRecord:
    """
    Добавляет независимый гауссов шум к n0 и n1.

    Args:
        record: точный выстрел
        spec: параметры шума
        seed: зерно numpy.random.default_rng

    Returns:
        Новый ShotRecord
    """
    if spec.sigma_n0 == 0 and spec.sigma_n1 == 0:
        return record
    rng = np.random.default_rng(seed)
    noise0, noise1 = rng.normal(0.0, 1.0, size=2)
    return replace(record, n0=record.n0 + spec.sigma_n0 * noise0, n1=record.n1 + spec.sigma_n1 * noise1)


def post_select(records: Sequence[ShotRecord], center: float, half_width: float) -> List[ShotRecord]:
    """
    Оставляет выстрелы с |N - center| <= half_width, порядок сохраняется.
    """
    if not half_width > 0:
        raise ValueError(f"Полуширина окна должна быть > 0: {half_width}")
    selected = [record for record in records if abs(record.total - center) <= half_width]
    if not selected:
        logger.warning("Постселекция по N = %.1f ± %.1f не оставила ни одного выстрела", center, half_width)
    elif len(selected) < len(records):
        logger.info("Постселекция: оставлено %d из %d выстрелов", len(selected), len(records))
    return selected


def group_by_theta(records: Iterable[ShotRecord]) -> List[Tuple[float, List[ShotRecord]]]:
    """Группы выстрелов с одинаковым θ по возрастанию θ, внутри группы по shot_index."""
    groups = {}
    for record in records:
        groups.setdefault(record.theta, []).append(record)
    return [
        (theta, sorted(groups[theta], key=lambda record: record.shot_index))
        for theta in sorted(groups)
    ]


def bin_by_atom_number(
    records: Sequence[ShotRecord], bin_width: float, min_count: int = 10,
) -> List[Tuple[float, float]]:
    """
    Разбивает выстрелы по полному числу атомов и считает ΔSz² в каждом интервале.

    Args:
        records: выстрелы одного угла (обычно θ = 0)
        bin_width: ширина интервала по N
        min_count: минимальное число выстрелов в интервале

    Returns:
        Список (средний N, ΔSz²) по возрастанию N
    """
    if bin_width <= 0:
        raise ValueError(f"Ширина интервала должна быть > 0: {bin_width}")
    totals = np.array([record.total for record in records])
    sz = np.array([record.sz for record in records])
    bins = np.floor(totals / bin_width).astype(int)
    result = []
    for index in np.unique(bins):
        mask = bins == index
        if np.count_nonzero(mask) < max(min_count, 2):
            continue
        result.append((float(np.mean(totals[mask])), float(np.var(sz[mask], ddof=1))))
    if not result:
        raise InsufficientDataError(f"Ни в одном интервале нет {min_count} выстрелов")
    return result


def atomic_write_text(path: str, text: str) -> None:
    """Записывает файл через временный файл в том же каталоге и os.replace."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle, temporary = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.unlink(temporary)
        raise


def format_records_csv(records: Sequence[ShotRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)
    for record in records:
        writer.writerow([
            record.shot_index,
            f"{np.degrees(record.theta):.6f}",
            f"{record.n0:.6f}",
            f"{record.n1:.6f}",
        ])
    return buffer.getvalue()


def write_records_csv(path: str, records: Sequence[ShotRecord]) -> None:
    atomic_write_text(path, format_records_csv(records))


def read_records_csv(path: str) -> List[ShotRecord]:
    """
    Читает CSV со схемой `shot,theta_deg,n0,n1`.

    Raises:
        RecordSchemaError: отсутствует столбец или значение не число (с именем столбца)
    """
    with open(path, "r", encoding="utf-8", newline="") as stream:
        reader = csv.DictReader(stream)
        header = reader.fieldnames or []
        for column in RECORD_COLUMNS:
            if column not in header:
                raise RecordSchemaError("столбец отсутствует в заголовке", column)
        records = []
        for line_number, row in enumerate(reader, start=2):
            values = {}
            for column in RECORD_COLUMNS:
                raw = row.get(column)
                try:
                    values[column] = int(raw) if column == "shot" else float(raw)
                except (TypeError, ValueError):
                    raise RecordSchemaError(f"строка {line_number}: не число {raw!r}", column) from None
            records.append(ShotRecord(
                shot_index=values["shot"],
                theta=float(np.radians(values["theta_deg"])),
                n0=values["n0"],
                n1=values["n1"],
            ))
    return records
