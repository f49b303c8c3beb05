"""
Стационарные моды двухкомпонентного конденсата в расщеплённых по состоянию ловушках.

Одномерная модель вдоль оси расщепления: поперечная часть берётся гауссовой,
ширина которой подстраивается под локальную линейную плотность. Для одной
компоненты σ² = a⊥²·sqrt(1 + 2a·n), при малой плотности получается основное
состояние поперечного осциллятора и g1D = g/(2π a⊥²).
Внутри модуля длина измеряется в a_z = sqrt(ħ/mω_z), энергия в ħω_z.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import constants
from scipy.integrate import trapezoid

from .exceptions import ConvergenceError

logger = logging.getLogger(__name__)

RB87_MASS = 86.909180527 * constants.atomic_mass
BOHR_RADIUS = constants.physical_constants["Bohr radius"][0]

DEFAULT_POINTS = 512
DEFAULT_TIME_STEP = 0.02
DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITERATIONS = 400_000
CHECK_EVERY = 20
NORMALIZATION_TOLERANCE = 1e-8


@dataclass(frozen=True)
class TrapSpec:
    """
    Параметры ловушки.

    Args:
        f_long: продольная частота (Гц), вдоль неё происходит расщепление
        f_ax: поперечная частота (Гц), обе поперечные оси считаются одинаковыми
        separation: смещение минимума ловушки |1⟩ относительно |0⟩ (м)
    """

    f_long: float = 109.0
    f_ax: float = 500.0
    separation: float = 0.0

    def __post_init__(self):
        if self.f_long <= 0 or self.f_ax <= 0:
            raise ValueError(f"Частоты ловушки должны быть > 0: f_long={self.f_long}, f_ax={self.f_ax}")
        if self.separation < 0:
            raise ValueError(f"Смещение ловушек отрицательно: {self.separation}")

    def with_separation(self, separation: float) -> "TrapSpec":
        return replace(self, separation=separation)


@dataclass(frozen=True)
class ScatteringSpec:
    """Длины рассеяния в боровских радиусах и масса атома (кг)."""

    a00: float = 100.4
    a01: float = 97.7
    a11: float = 95.0
    mass: float = RB87_MASS

    def __post_init__(self):
        if min(self.a00, self.a01, self.a11) <= 0:
            raise ValueError("Длины рассеяния должны быть > 0")
        if self.mass <= 0:
            raise ValueError(f"Масса должна быть > 0: {self.mass}")

    def matrix(self) -> np.ndarray:
        """Матрица a_jk в метрах."""
        return BOHR_RADIUS * np.array([[self.a00, self.a01], [self.a01, self.a11]])


@dataclass(frozen=True)
class ModeProfile:
    """
    Продольные плотности двух компонент, каждая нормирована на 1.

    Args:
        grid: равномерная сетка (м)
        density0, density1: |φ_j|² после интегрирования по поперечным координатам (1/м)
        n0, n1: числа атомов, для которых найдены моды
        energy: полная энергия среднего поля (Дж)
        iterations: число шагов в мнимом времени
        energy_trace: энергия (Дж) на каждой проверке сходимости
    """

    grid: np.ndarray
    density0: np.ndarray
    density1: np.ndarray
    n0: float
    n1: float
    energy: float = 0.0
    iterations: int = 0
    energy_trace: Tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        step = self.grid[1] - self.grid[0]
        for name in ("density0", "density1"):
            density = np.asarray(getattr(self, name), dtype=float)
            if np.any(density < 0):
                raise ValueError(f"{name} содержит отрицательные значения")
            norm = float(np.sum(density) * step)
            if abs(norm - 1.0) > NORMALIZATION_TOLERANCE:
                raise ValueError(f"{name} не нормирована: ∫ = {norm:.10f}")

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])


@dataclass(frozen=True)
class SplitProfile:
    """
    χ(t) и перекрытие λ(t) на протяжении последовательности расщепления.

    Args:
        times: моменты времени (с)
        lambda_t: λ(t) ∈ [0, 1]
        chi_t: χ(t) >= 0 (рад/с)
        contrast_estimate: оценка контраста после рекомбинации
    """

    times: np.ndarray
    lambda_t: np.ndarray
    chi_t: np.ndarray
    contrast_estimate: float
    displacement: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if np.any(self.lambda_t < -1e-12) or np.any(self.lambda_t > 1 + 1e-12):
            raise ValueError("λ(t) вне [0, 1]")
        if not 0.0 <= self.contrast_estimate <= 1.0 + 1e-12:
            raise ValueError(f"Контраст вне [0, 1]: {self.contrast_estimate}")

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def twist_integral(self) -> float:
        """∫χ(t)dt по всей последовательности (рад)."""
        return float(trapezoid(self.chi_t, self.times))

    def scaled(self, factor: float) -> "SplitProfile":
        """Профиль с χ(t), умноженным на калибровочный множитель."""
        if factor < 0:
            raise ValueError(f"Множитель должен быть >= 0: {factor}")
        return replace(self, chi_t=self.chi_t * factor)


class ChiLambdaRow(NamedTuple):
    separation: float
    overlap: float
    chi: float


@dataclass(frozen=True)
class _ReducedUnits:
    length: float
    omega_long: float
    omega_ax: float
    couplings: np.ndarray

    @property
    def energy(self) -> float:
        return constants.hbar * self.omega_long

    @property
    def transverse_energy(self) -> float:
        # основное состояние двумерного поперечного осциллятора, в единицах ħω_z
        return self.omega_ax / self.omega_long


def _reduced_units(trap: TrapSpec, scat: ScatteringSpec) -> _ReducedUnits:
    omega_long = 2 * np.pi * trap.f_long
    omega_ax = 2 * np.pi * trap.f_ax
    length = np.sqrt(constants.hbar / (scat.mass * omega_long))
    # g1D/(ħω_z a_z) = 2 a ω⊥ / (ω_z a_z)
    couplings = 2.0 * scat.matrix() * omega_ax / (omega_long * length)
    return _ReducedUnits(length=length, omega_long=omega_long, omega_ax=omega_ax, couplings=couplings)


def _thomas_fermi_radius(units: _ReducedUnits, n_total: float) -> float:
    coupling = float(np.max(units.couplings))
    mu = (3.0 * coupling * n_total / (4.0 * np.sqrt(2.0))) ** (2.0 / 3.0)
    return float(np.sqrt(2.0 * mu))


def default_grid(trap: TrapSpec, scat: ScatteringSpec, n_total: float, points: int = DEFAULT_POINTS) -> np.ndarray:
    """
    Равномерная сетка (м) из points узлов на ±(6·max(R_TF, a_z) + s/2).
    """
    units = _reduced_units(trap, scat)
    radius = max(_thomas_fermi_radius(units, n_total), 1.0)
    half = 6.0 * radius + 0.5 * trap.separation / units.length
    return np.linspace(-half, half, points, endpoint=False) * units.length


def _trap_potentials(z: np.ndarray, separation: float) -> np.ndarray:
    # |0⟩ в -s/2, |1⟩ в +s/2
    return np.stack([0.5 * (z + separation / 2.0) ** 2, 0.5 * (z - separation / 2.0) ** 2])


def _wavenumbers(z: np.ndarray) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(z.size, z[1] - z[0])


def _transverse_terms(densities: np.ndarray, couplings: np.ndarray, transverse: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Вклад поперечного движения и взаимодействия при локально оптимальной ширине.

    Для гауссова поперечного профиля σ² = a⊥²·η энергия на единицу длины минимальна
    при η² = 1 + Q/(w·n), где n_j = N_j|φ_j|², n = Σ n_j, Q = Σ g_jk n_j n_k и
    w = ω⊥/ω_z. В минимуме плотность энергии равна w·n·η, а потенциал компоненты j
    равен (w(1 + A) + Σ_k g_jk n_k)/η, A = Q/(2w·n).

    Returns:
        плотность энергии (P,) и потенциалы компонент (2, P) в ħω_z
    """
    total = densities.sum(axis=0)
    mean_field = couplings @ densities
    quadratic = np.sum(densities * mean_field, axis=0)
    ratio = np.divide(quadratic, transverse * total, out=np.zeros_like(total), where=total > 0)
    eta = np.sqrt(1.0 + ratio)
    return transverse * total * eta, (transverse * (1.0 + 0.5 * ratio) + mean_field) / eta


def _energies(
    psi: np.ndarray,
    static: np.ndarray,
    units: _ReducedUnits,
    counts: np.ndarray,
    k: np.ndarray,
    step: float,
) -> Tuple[float, np.ndarray]:
    """
    Полная энергия и химические потенциалы (в ħω_z, с поперечным вкладом).
    """
    spectrum = np.fft.fft(psi, axis=1)
    kinetic = 0.5 * step / psi.shape[1] * np.sum(k ** 2 * np.abs(spectrum) ** 2, axis=1)
    shapes = psi ** 2
    trap = np.sum(static * shapes, axis=1) * step
    energy_density, potentials = _transverse_terms(counts[:, None] * shapes, units.couplings, units.transverse_energy)
    mu = kinetic + trap + np.sum(potentials * shapes, axis=1) * step
    energy = float(np.dot(counts, kinetic + trap) + np.sum(energy_density) * step)
    return energy, mu


def _initial_psi(z: np.ndarray, separation: float, width: float, initial: Optional[ModeProfile], length: float) -> np.ndarray:
    if initial is not None:
        densities = [
            np.interp(z, initial.grid / length, density * length, left=0.0, right=0.0)
            for density in (initial.density0, initial.density1)
        ]
        psi = np.sqrt(np.clip(np.array(densities), 0.0, None))
    else:
        psi = np.exp(-((z[None, :] - np.array([[-separation / 2.0], [separation / 2.0]])) ** 2) / (2.0 * width ** 2))
    step = z[1] - z[0]
    return psi / np.sqrt(np.sum(psi ** 2, axis=1, keepdims=True) * step)


def stationary_modes(
    trap: TrapSpec,
    scat: ScatteringSpec,
    n0: float,
    n1: float,
    points: int = DEFAULT_POINTS,
    time_step: float = DEFAULT_TIME_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    grid: Optional[np.ndarray] = None,
    initial: Optional[ModeProfile] = None,
) -> ModeProfile:
    """
    Основное состояние связанных одномерных уравнений Гросса–Питаевского.

    Распространение в мнимом времени методом расщепления (split-step Fourier)
    с перенормировкой каждой компоненты. Сходимость: относительное изменение
    энергии и обоих химических потенциалов за шаг меньше tolerance.

    Args:
        trap: ловушка
        scat: длины рассеяния
        n0, n1: числа атомов в компонентах
        points: число узлов сетки, если grid не задана
        time_step: шаг мнимого времени (в 1/ω_z)
        tolerance: критерий сходимости
        max_iterations: предельное число шагов
        grid: готовая сетка (м), используется для серии согласованных решений
        initial: начальное приближение (например, решение для близких N)

    Returns:
        ModeProfile

    Raises:
        ConvergenceError: если критерий не выполнен за max_iterations шагов
    """
    if n0 < 0 or n1 < 0 or n0 + n1 <= 0:
        raise ValueError(f"Числа атомов должны быть >= 0 и не оба нулевые: n0={n0}, n1={n1}")

    units = _reduced_units(trap, scat)
    if grid is None:
        grid = default_grid(trap, scat, n0 + n1, points)
    z = np.asarray(grid, dtype=float) / units.length
    step = z[1] - z[0]
    separation = trap.separation / units.length
    counts = np.array([n0, n1], dtype=float)
    static = _trap_potentials(z, separation)
    k = _wavenumbers(z)
    kinetic_factor = np.exp(-time_step * k ** 2 / 2.0)

    width = max(1.0, _thomas_fermi_radius(units, n0 + n1) / 2.0)
    psi = _initial_psi(z, separation, width, initial, units.length)

    def potential(state: np.ndarray) -> np.ndarray:
        _, potentials = _transverse_terms(counts[:, None] * state ** 2, units.couplings, units.transverse_energy)
        return static + potentials

    energy, mu = _energies(psi, static, units, counts, k, step)
    trace = [energy * units.energy]
    residual = np.inf
    iterations = 0
    while iterations < max_iterations:
        for _ in range(CHECK_EVERY):
            psi = psi * np.exp(-0.5 * time_step * potential(psi))
            psi = np.fft.ifft(kinetic_factor * np.fft.fft(psi, axis=1), axis=1).real
            psi = psi * np.exp(-0.5 * time_step * potential(psi))
            psi = psi / np.sqrt(np.sum(psi ** 2, axis=1, keepdims=True) * step)
        iterations += CHECK_EVERY

        new_energy, new_mu = _energies(psi, static, units, counts, k, step)
        previous = np.concatenate([[energy], mu])
        current = np.concatenate([[new_energy], new_mu])
        residual = float(np.max(np.abs(current - previous) / np.maximum(np.abs(current), 1e-300))) / CHECK_EVERY
        energy, mu = new_energy, new_mu
        trace.append(energy * units.energy)
        if residual < tolerance:
            break
    else:
        raise ConvergenceError(f"Моды не сошлись за {max_iterations} шагов (n0={n0}, n1={n1})", residual)

    logger.debug("Моды найдены за %d шагов, μ = %s ħω_z", iterations, mu)
    densities = psi ** 2 / units.length
    densities /= np.sum(densities, axis=1, keepdims=True) * (step * units.length)
    return ModeProfile(
        grid=np.asarray(grid, dtype=float),
        density0=densities[0],
        density1=densities[1],
        n0=float(n0),
        n1=float(n1),
        energy=energy * units.energy,
        iterations=iterations,
        energy_trace=tuple(trace),
    )


def chemical_potential(trap: TrapSpec, scat: ScatteringSpec, modes: ModeProfile, which: int) -> float:
    """
    μ_j = ⟨φ_j|h_j|φ_j⟩ + ∫|φ_j|²·U_j (Дж).

    Кинетическая энергия считается спектрально. Поперечная часть и взаимодействие
    берутся при локально оптимальной поперечной ширине, для разреженного газа
    это ħω⊥ плюс g1D-член.
    """
    if which not in (0, 1):
        raise ValueError(f"Компонента должна быть 0 или 1, получено {which}")
    units = _reduced_units(trap, scat)
    z = modes.grid / units.length
    step = z[1] - z[0]
    psi = np.sqrt(np.array([modes.density0, modes.density1]) * units.length)
    counts = np.array([modes.n0, modes.n1])
    static = _trap_potentials(z, trap.separation / units.length)
    _, mu = _energies(psi, static, units, counts, _wavenumbers(z), step)
    return float(mu[which] * units.energy)


def overlap_lambda(modes: ModeProfile) -> float:
    """λ = ∫n0·n1 / sqrt(∫n0² ∫n1²) ∈ [0, 1]."""
    if np.array_equal(modes.density0, modes.density1):
        return 1.0
    cross = np.sum(modes.density0 * modes.density1)
    norm = np.sqrt(np.sum(modes.density0 ** 2) * np.sum(modes.density1 ** 2))
    if norm == 0:
        return 0.0
    return float(np.clip(cross / norm, 0.0, 1.0))


def amplitude_overlap(modes: ModeProfile) -> float:
    """∫φ0·φ1 для вещественных неотрицательных мод: контраст после рекомбинации."""
    value = np.sum(np.sqrt(modes.density0 * modes.density1)) * modes.step
    return float(np.clip(value, 0.0, 1.0))


def _chi_with_base(
    trap: TrapSpec, scat: ScatteringSpec, n_total: float, step: Optional[float] = None, **solver,
) -> Tuple[float, ModeProfile]:
    if n_total < 2:
        raise ValueError(f"Для χ нужно N >= 2, получено {n_total}")
    delta = n_total / 100.0 if step is None else step
    if not 0 < delta < n_total / 2.0:
        raise ValueError(f"Шаг по числу атомов вне (0, N/2): {delta}")

    half = n_total / 2.0
    points = solver.pop("points", DEFAULT_POINTS)
    grid = solver.pop("grid", None)
    if grid is None:
        grid = default_grid(trap, scat, n_total, points)
    base = stationary_modes(trap, scat, half, half, grid=grid, **solver)

    def potentials(n0: float, n1: float) -> np.ndarray:
        modes = stationary_modes(trap, scat, n0, n1, grid=grid, initial=base, **solver)
        return np.array([chemical_potential(trap, scat, modes, 0), chemical_potential(trap, scat, modes, 1)])

    d_n0 = (potentials(half + delta, half) - potentials(half - delta, half)) / (2.0 * delta)
    d_n1 = (potentials(half, half + delta) - potentials(half, half - delta)) / (2.0 * delta)
    # χ = (∂_{N0}μ0 + ∂_{N1}μ1 - ∂_{N1}μ0 - ∂_{N0}μ1) / 2ħ
    chi = (d_n0[0] + d_n1[1] - d_n1[0] - d_n0[1]) / (2.0 * constants.hbar)
    return float(chi), base


def chi_from_modes(trap: TrapSpec, scat: ScatteringSpec, n_total: float, step: Optional[float] = None, **solver) -> float:
    """
    Нелинейность χ (рад/с) при ⟨N0⟩ = ⟨N1⟩ = N/2.

    Производные химических потенциалов берутся симметричными конечными разностями
    с шагом ΔN (по умолчанию N/100); каждое значение требует отдельного решения
    на общей сетке.

    Args:
        trap: ловушка
        scat: длины рассеяния
        n_total: полное число атомов N
        step: шаг ΔN
        solver: параметры stationary_modes

    Returns:
        χ в рад/с
    """
    chi, _ = _chi_with_base(trap, scat, n_total, step, **solver)
    return chi


def _curve_row(trap: TrapSpec, scat: ScatteringSpec, n_total: float, solver: dict, separation: float) -> Tuple[ChiLambdaRow, float]:
    displaced = trap.with_separation(separation)
    chi, base = _chi_with_base(displaced, scat, n_total, **dict(solver))
    row = ChiLambdaRow(separation=float(separation), overlap=overlap_lambda(base), chi=chi)
    logger.info("s = %.3f мкм: λ = %.4f, χ = %.4f 1/с", separation * 1e6, row.overlap, row.chi)
    return row, amplitude_overlap(base)


def _curve(
    trap: TrapSpec, scat: ScatteringSpec, n_total: float, separations: Sequence[float], workers: Optional[int], solver: dict,
) -> List[Tuple[ChiLambdaRow, float]]:
    separations = [float(value) for value in separations]
    if not separations:
        raise ValueError("Список смещений пуст")
    if any(b < a for a, b in zip(separations, separations[1:])):
        raise ValueError("Смещения должны быть отсортированы по возрастанию")

    task = partial(_curve_row, trap, scat, n_total, solver)
    if workers and workers > 1 and len(separations) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(task, separations))
    else:
        results = [task(separation) for separation in separations]

    rows = [row for row, _ in results]
    by_overlap = sorted(rows, key=lambda row: row.overlap)
    chis = np.array([row.chi for row in by_overlap])
    slack = 1e-3 * max(float(np.max(np.abs(chis))), 1e-12)
    if np.any(np.diff(chis) > slack):
        logger.warning("χ(λ) не монотонна на полученной таблице")
    return results


def chi_lambda_curve(
    trap: TrapSpec,
    scat: ScatteringSpec,
    n_total: float,
    separations: Sequence[float],
    workers: Optional[int] = None,
    **solver,
) -> List[ChiLambdaRow]:
    """
    Таблица (s, λ, χ) для ряда смещений ловушек.

    Строки независимы; при workers > 1 считаются в пуле процессов,
    порядок строк совпадает с порядком separations.
    """
    return [row for row, _ in _curve(trap, scat, n_total, separations, workers, solver)]


def split_sequence_profile(
    trap: TrapSpec,
    scat: ScatteringSpec,
    n_total: float,
    duration: float,
    samples: int = 201,
    table_points: int = 9,
    amplitude_scale: float = 1.0,
    workers: Optional[int] = None,
    **solver,
) -> SplitProfile:
    """
    Феноменологическая модель χ(t) во время расщепления и рекомбинации.

    Центры компонент совершают одно гармоническое колебание за время T к смещённому
    минимуму: d(t) = A·s·(1 - cos 2πt/T), A = amplitude_scale. Моды в каждый момент
    считаются стационарными для смещения d(t): λ(t) и χ(t) интерполируются по таблице
    chi_lambda_curve, контраст оценивается по перекрытию амплитуд при d(T).

    Args:
        trap: ловушка, trap.separation = s
        scat: длины рассеяния
        n_total: полное число атомов
        duration: T (с)
        samples: число точек по времени
        table_points: число смещений в таблице χ(λ)
        amplitude_scale: множитель амплитуды колебания
        workers: число процессов для таблицы

    Returns:
        SplitProfile
    """
    if duration <= 0:
        raise ValueError(f"Длительность должна быть > 0: {duration}")
    if amplitude_scale < 0:
        raise ValueError(f"amplitude_scale должен быть >= 0: {amplitude_scale}")

    times = np.linspace(0.0, duration, samples)
    displacement = amplitude_scale * trap.separation * (1.0 - np.cos(2.0 * np.pi * times / duration))
    largest = float(np.max(displacement))
    separations = [0.0] if largest == 0 else list(np.linspace(0.0, largest, max(table_points, 2)))

    results = _curve(trap, scat, n_total, separations, workers, solver)
    table_s = np.array([row.separation for row, _ in results])
    table_lambda = np.array([row.overlap for row, _ in results])
    table_chi = np.array([row.chi for row, _ in results])
    table_contrast = np.array([contrast for _, contrast in results])

    if table_s.size == 1:
        lambda_t = np.full_like(times, table_lambda[0])
        chi_t = np.full_like(times, table_chi[0])
        contrast = float(table_contrast[0])
    else:
        lambda_t = np.interp(displacement, table_s, table_lambda)
        order = np.argsort(table_lambda, kind="stable")
        chi_t = np.interp(lambda_t, table_lambda[order], table_chi[order])
        contrast = float(np.interp(displacement[-1], table_s, table_contrast))

    if np.any(chi_t < 0):
        logger.warning("χ(t) < 0 в части профиля (минимум %.3e 1/с)", float(np.min(chi_t)))

    return SplitProfile(
        times=times,
        lambda_t=np.clip(lambda_t, 0.0, 1.0),
        chi_t=chi_t,
        contrast_estimate=float(np.clip(contrast, 0.0, 1.0)),
        displacement=displacement,
    )
