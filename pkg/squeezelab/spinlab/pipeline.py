"""
Сборка вычислений из конфигурации: моделирование выстрелов, томограмма с отчётом о сжатии,
реконструкция функции Вигнера, таблица χ(λ) и калибровка числа атомов.
"""

import io
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from dynamics_noise import SequenceSpec, TwistSpec, calibrate_twist, ensemble_scan
from metrology import SqueezingReport, squeezing_report
from mode_model import ChiLambdaRow, SplitProfile, chi_lambda_curve, split_sequence_profile
from tomography import (
    CalibrationFit,
    InsufficientDataError,
    ShotRecord,
    Tomogram,
    bin_by_atom_number,
    calibration_fit,
    post_select,
    tomogram,
)
from wigner import ContourResult, WignerGrid, contour_at, default_grid, inverse_radon, marginals_from_records

from .config import RunConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TomogramAnalysis:
    tomogram: Tomogram
    report: SqueezingReport
    n_selected: int
    n_total: int


@dataclass(frozen=True)
class Reconstruction:
    """
    Реконструкция и эталон.

    reference_area: площадь круга 1/√e когерентного состояния с тем же ⟨N⟩,
    расширенного шумом изображения: π(⟨N⟩/4 + (σ0² + σ1²)/4).
    """

    grid: WignerGrid
    contour: ContourResult
    mean_atoms: float
    reference_area: float
    n_angles: int


def _solver_options(config: RunConfig) -> dict:
    options = config.modes.solver_options()
    if config.modes.fd_step_atoms is not None:
        options["step"] = config.modes.fd_step_atoms
    return options


def split_profile(config: RunConfig) -> SplitProfile:
    """Профиль χ(t) последовательности расщепления для параметров конфигурации."""
    return split_sequence_profile(
        config.trap_spec(),
        config.scattering_spec(),
        config.physics.n_atoms,
        config.sequence.duration_ms * 1e-3,
        samples=config.sequence.profile_samples,
        table_points=config.sequence.profile_table_points,
        amplitude_scale=config.sequence.amplitude_scale,
        workers=config.run.workers,
        **_solver_options(config),
    )


def build_twist(config: RunConfig) -> TwistSpec:
    """
    Участок скручивания по секции [sequence].

    none: только свободная прецессия; constant: χ из chi_per_s или из калибровки
    ∫χdt под target_floor_db; profile: χ(t) модели расщепления, при заданном
    target_floor_db масштабированная к откалиброванному ∫χdt. Калибровка учитывает
    потери из секции [loss], технические шумы в неё не входят.
    """
    section = config.sequence
    duration = section.duration_ms * 1e-3
    free_detuning = 2 * np.pi * section.free_detuning_hz
    if section.twist_mode == "none":
        return TwistSpec(duration=duration, free_detuning=free_detuning)

    if section.twist_mode == "profile":
        twist = TwistSpec.from_profile(split_profile(config), free_detuning=free_detuning)
    else:
        twist = TwistSpec(duration=duration, chi=section.chi_per_s or 0.0, free_detuning=free_detuning)

    if section.target_floor_db is not None:
        target = calibrate_twist(
            config.physics.n_atoms, section.target_floor_db, loss=config.loss_spec(), twist=twist, seed=config.run.seed,
        )
        twist = twist.with_twist_integral(target)
    logger.info("Скручивание: режим %s, ∫χdt = %.4e рад", section.twist_mode, twist.twist_integral)
    return twist


def build_sequence(config: RunConfig, twist: Optional[TwistSpec] = None) -> SequenceSpec:
    sequence = SequenceSpec.standard(twist or build_twist(config), rabi=config.rabi)
    return replace(sequence, tomography_phase_rule=config.physics.tomography_phase_rule)


def simulate(config: RunConfig) -> List[ShotRecord]:
    """
    Выстрелы для всех углов [sequence] theta_deg.

    Шум изображения добавляется, если imaging.apply_to_simulation.
    """
    imaging = config.imaging_spec() if config.imaging.apply_to_simulation else None
    return ensemble_scan(
        build_sequence(config),
        config.thetas,
        config.noise_spec(),
        config.loss_spec(),
        n_shots=config.run.shots,
        base_seed=config.run.seed,
        imaging=imaging,
        workers=config.run.workers,
        chunk_size=config.run.chunk_size,
    )


def analyse(config: RunConfig, records: Sequence[ShotRecord]) -> TomogramAnalysis:
    """
    Томограмма и отчёт о сжатии.

    Выстрелы (при заданной полуширине) отбираются по N вокруг среднего, дисперсии
    исправляются на дрейф и шум изображения, минимум томограммы вместе с контрастом
    analysis.contrast даёт ξ² и глубину запутанности.
    """
    section = config.analysis
    records = list(records)
    selected = records
    if section.post_select_half_width_atoms is not None and records:
        center = float(np.mean([record.total for record in records]))
        selected = post_select(records, center, section.post_select_half_width_atoms)
    if not selected:
        raise InsufficientDataError("После постселекции не осталось выстрелов")

    drift_range = (section.drift_min_deg, section.drift_max_deg) if section.drift_correction else None
    result = tomogram(
        selected,
        imaging=config.imaging_spec(),
        drift_range=drift_range,
        window=section.drift_window,
        order=section.drift_order,
    )
    minimum = result.minimum()
    # дисперсия S_θ периодична по θ с периодом π
    theta_min = (minimum.theta + np.pi / 2) % np.pi - np.pi / 2
    report = squeezing_report(result.mean_atoms, minimum.variance_corrected, section.contrast, theta_min)
    return TomogramAnalysis(tomogram=result, report=report, n_selected=len(selected), n_total=len(records))


def reconstruct(config: RunConfig, records: Sequence[ShotRecord]) -> Reconstruction:
    section = config.reconstruct
    records = list(records)
    projections = marginals_from_records(records, points=section.s_points)
    mean_atoms = float(np.mean([record.total for record in records]))
    sy_axis, sz_axis = default_grid(mean_atoms, section.grid_points)
    grid = inverse_radon(projections, sy_axis, sz_axis, filter_name=section.filter)
    contour = contour_at(grid, section.contour_fraction)
    reference_variance = mean_atoms / 4.0 + config.imaging_spec().sz_variance
    # у гауссианы линия уровня e^{-1/2}·max проходит на расстоянии σ от центра
    level_radius2 = -2.0 * np.log(section.contour_fraction) * reference_variance
    return Reconstruction(
        grid=grid,
        contour=contour,
        mean_atoms=mean_atoms,
        reference_area=float(np.pi * level_radius2),
        n_angles=len(projections),
    )


def chi_curve(config: RunConfig) -> List[ChiLambdaRow]:
    separations = [value * 1e-6 for value in config.modes.separations_um]
    return chi_lambda_curve(
        config.trap_spec(0.0),
        config.scattering_spec(),
        config.physics.n_atoms,
        separations,
        workers=config.run.workers,
        **_solver_options(config),
    )


def calibrate(config: RunConfig, records: Sequence[ShotRecord]) -> CalibrationFit:
    """
    Подгонка ΔSz² = aN + bN² по выстрелам угла analysis.calibration_theta_deg.

    Числа атомов умножаются на analysis.calibration_count_scale (ошибка эффективности
    детектирования), шум изображения вычитается в каждом интервале N.
    """
    section = config.analysis
    theta = float(np.radians(section.calibration_theta_deg))
    chosen = [record for record in records if abs(record.theta - theta) < 1e-6]
    if not chosen:
        raise InsufficientDataError(f"Нет выстрелов с θ = {section.calibration_theta_deg}°")
    scale = section.calibration_count_scale
    if scale != 1.0:
        chosen = [replace(record, n0=record.n0 * scale, n1=record.n1 * scale) for record in chosen]
    imaging = config.imaging_spec()
    pairs = [
        (count, variance - imaging.sz_variance)
        for count, variance in bin_by_atom_number(chosen, section.calibration_bin_width_atoms, section.calibration_min_count)
    ]
    return calibration_fit(pairs)


def format_report_csv(report: SqueezingReport) -> str:
    buffer = io.StringIO()
    buffer.write("key,value\n")
    for key, value in report.as_rows():
        buffer.write(f"{key},{value}\n")
    return buffer.getvalue()


def format_chi_curve_csv(rows: Sequence[ChiLambdaRow]) -> str:
    buffer = io.StringIO()
    buffer.write("separation_um,lambda,chi_per_s\n")
    for row in rows:
        buffer.write(f"{row.separation * 1e6:.6f},{row.overlap:.8f},{row.chi:.8e}\n")
    return buffer.getvalue()


def format_profile_csv(profile: SplitProfile) -> str:
    buffer = io.StringIO()
    buffer.write("t_ms,displacement_um,lambda,chi_per_s\n")
    displacement = profile.displacement if profile.displacement is not None else np.zeros_like(profile.times)
    for t, d, overlap, chi in zip(profile.times, displacement, profile.lambda_t, profile.chi_t):
        buffer.write(f"{t * 1e3:.6f},{d * 1e6:.6f},{overlap:.8f},{chi:.8e}\n")
    return buffer.getvalue()


def format_calibration_csv(fit: CalibrationFit) -> str:
    rows = [
        ("a", fit.a), ("a_stderr", fit.a_stderr),
        ("b", fit.b), ("b_stderr", fit.b_stderr),
        ("rescale", fit.rescale),
        ("slope_through_origin", fit.slope_through_origin), ("slope_stderr", fit.slope_stderr),
    ]
    return "key,value\n" + "".join(f"{key},{value:.8e}\n" for key, value in rows)
