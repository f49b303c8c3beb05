"""
Монте-Карло моделирование экспериментальной последовательности импульс–скручивание–импульс
с техническими шумами и потерями атомов (1-, 2- и 3-частичными) методом квантовых траекторий.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache, partial
from itertools import groupby
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq, minimize_scalar

from metrology import oat_min_variance, to_db
from mode_model import SplitProfile
from spin_core import (
    CollectiveSpinState,
    PulseSpec,
    evolve_oat,
    evolve_pulse,
    evolve_pulses,
    expectations,
    pulsed_ground_state,
    rotate_z,
    sample_sz,
)
from tomography import ImagingNoiseSpec, ShotRecord, add_imaging_noise

from .exceptions import CalibrationError

logger = logging.getLogger(__name__)

DEFAULT_RABI = 2 * np.pi * 2.1e3
PHASE_RULES = {"clockwise": np.pi, "counterclockwise": 0.0}
PULSE_BATCH = 256
CALIBRATION_STEP = 1.1

# (имя канала, атомов из |0⟩, атомов из |1⟩)
LOSS_CHANNELS = (
    ("1_0", 1, 0),
    ("1_1", 0, 1),
    ("2_00", 2, 0),
    ("2_01", 1, 1),
    ("2_11", 0, 2),
    ("3_000", 3, 0),
    ("3_111", 0, 3),
)


@dataclass(frozen=True)
class NoiseSpec:
    """
    Технические шумы одного выстрела.

    Args:
        phase_rms: с.к.о. фазы Δφ (рад), поворот вокруг z перед импульсом томографии
        detuning_rms: с.к.о. расстройки во время импульсов (рад/с)
        pulse_power_rel_rms: относительное с.к.о. мощности импульсов
        atom_number_mean: ⟨N⟩
        atom_number_rms: ΔN
        correlated_pulse_detuning: одна и та же расстройка для обоих импульсов выстрела
    """

    phase_rms: float = 0.0
    detuning_rms: float = 0.0
    pulse_power_rel_rms: float = 0.0
    atom_number_mean: float = 1250.0
    atom_number_rms: float = 0.0
    correlated_pulse_detuning: bool = False

    def __post_init__(self):
        for name in ("phase_rms", "detuning_rms", "pulse_power_rel_rms", "atom_number_rms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} должно быть >= 0")
        if self.atom_number_mean < 1:
            raise ValueError(f"atom_number_mean должно быть >= 1: {self.atom_number_mean}")


@dataclass(frozen=True)
class NoiseRealization:
    n_atoms: int
    phase_offset: float
    prepare_detuning: float
    tomography_detuning: float
    power_deviation: float

    @property
    def rabi_scale(self) -> float:
        """Ω ∝ sqrt(P): множитель частоты Раби при относительном отклонении мощности."""
        return float(np.sqrt(max(1.0 + self.power_deviation, 0.0)))


@dataclass(frozen=True)
class LossSpec:
    """
    Коэффициенты потерь двухмодовой модели (1/с).

    Скорость канала равна rate·N_0^(r0)·N_1^(r1) с убывающими степенями,
    например rate2_00·N0(N0 - 1) или rate2_01·N0·N1.
    """

    rate1_0: float = 0.0
    rate1_1: float = 0.0
    rate2_00: float = 0.0
    rate2_01: float = 0.0
    rate2_11: float = 0.0
    rate3_000: float = 0.0
    rate3_111: float = 0.0

    def __post_init__(self):
        for name, _, _ in LOSS_CHANNELS:
            if getattr(self, f"rate{name}") < 0:
                raise ValueError(f"rate{name} должно быть >= 0")

    @classmethod
    def typical(cls) -> "LossSpec":
        """Около 10% потерь за 12.7 мс при N = 1250 в суперпозиции поровну."""
        return cls(rate1_0=0.1, rate1_1=0.1, rate2_01=2.6e-3, rate2_11=7.7e-3, rate3_000=2e-6)

    def channels(self) -> List[Tuple[str, int, int, float]]:
        """Каналы с ненулевой скоростью."""
        result = []
        for name, removed0, removed1 in LOSS_CHANNELS:
            rate = getattr(self, f"rate{name}")
            if rate > 0:
                result.append((name, removed0, removed1, rate))
        return result

    @property
    def is_zero(self) -> bool:
        return not self.channels()


@dataclass(frozen=True)
class TwistSpec:
    """
    Участок скручивания длительностью T.

    Args:
        duration: T (с)
        chi: постоянная χ (рад/с), если профиль не задан
        free_detuning: δ на время скручивания (рад/с)
        profile: зависимость χ(t) от времени, отсчитанного от начала участка
    """

    duration: float
    chi: float = 0.0
    free_detuning: float = 0.0
    profile: Optional[SplitProfile] = field(default=None, repr=False)

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError(f"Длительность скручивания отрицательна: {self.duration}")

    @classmethod
    def from_profile(cls, profile: SplitProfile, free_detuning: float = 0.0) -> "TwistSpec":
        return cls(duration=profile.duration, free_detuning=free_detuning, profile=profile)

    @property
    def twist_integral(self) -> float:
        """∫χdt (рад)."""
        if self.profile is not None:
            return self.profile.twist_integral()
        return self.chi * self.duration

    def with_twist_integral(self, target: float) -> "TwistSpec":
        """Та же форма χ(t), масштабированная до ∫χdt = target."""
        if self.profile is not None:
            current = self.profile.twist_integral()
            if current <= 0:
                raise ValueError("∫χdt профиля неположителен, масштабирование невозможно")
            return replace(self, profile=self.profile.scaled(target / current))
        if self.duration == 0:
            raise ValueError("Нулевая длительность скручивания")
        return replace(self, chi=target / self.duration)


@dataclass(frozen=True)
class SequenceSpec:
    """
    Последовательность: подготовительный импульс, скручивание, импульс томографии.

    Args:
        prepare_pulse: первый импульс
        twist: участок скручивания
        tomography_angle: θ (рад), приводится к [0, 2π)
        tomography_rabi: Ω импульса томографии, длительность θ/Ω
        tomography_phase_rule: "clockwise" (φ = π) или "counterclockwise" (φ = 0)
    """

    prepare_pulse: PulseSpec
    twist: TwistSpec
    tomography_angle: float = 0.0
    tomography_rabi: float = DEFAULT_RABI
    tomography_phase_rule: str = "clockwise"

    def __post_init__(self):
        if self.tomography_phase_rule not in PHASE_RULES:
            raise ValueError(f"Неизвестное правило фазы: {self.tomography_phase_rule}")
        if self.tomography_rabi <= 0:
            raise ValueError(f"Ω томографии должна быть > 0: {self.tomography_rabi}")
        object.__setattr__(self, "tomography_angle", float(self.tomography_angle % (2 * np.pi)))

    @classmethod
    def standard(cls, twist: TwistSpec, theta: float = 0.0, rabi: float = DEFAULT_RABI) -> "SequenceSpec":
        """π/2-импульс с фазой π/2 (из |0…0⟩ в ⟨Sx⟩ = N/2) и томография по часовой стрелке."""
        prepare = PulseSpec.for_angle(rabi, np.pi / 2, phase=np.pi / 2)
        return cls(prepare_pulse=prepare, twist=twist, tomography_angle=theta, tomography_rabi=rabi)

    def with_angle(self, theta: float) -> "SequenceSpec":
        return replace(self, tomography_angle=theta)

    def tomography_pulse(self, rabi_scale: float = 1.0, detuning: float = 0.0) -> PulseSpec:
        return PulseSpec(
            rabi=self.tomography_rabi * rabi_scale,
            phase=PHASE_RULES[self.tomography_phase_rule],
            detuning=detuning,
            duration=self.tomography_angle / self.tomography_rabi,
        )


@dataclass(frozen=True)
class TrajectoryResult:
    """
    Итог одной траектории.

    Args:
        final_state: состояние (None, если потеряны все атомы)
        n_atoms: число атомов в конце
        realized_noise: реализованные значения шумов
        jump_log: (время, канал) в порядке возрастания времени
        contrast: 2|⟨S+⟩|/N перед импульсом томографии
    """

    final_state: Optional[CollectiveSpinState]
    n_atoms: int
    realized_noise: Optional[NoiseRealization] = None
    jump_log: List[Tuple[float, str]] = field(default_factory=list)
    contrast: float = float("nan")


def sample_noise(spec: NoiseSpec, seed) -> NoiseRealization:
    """
    Независимые гауссовы реализации шумов; число атомов округляется и ограничивается снизу 1.

    Порядок выборки фиксирован, поэтому реализация определяется только зерном.
    """
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal(5)
    n_atoms = max(1, int(np.rint(spec.atom_number_mean + spec.atom_number_rms * draws[0])))
    prepare_detuning = spec.detuning_rms * draws[3]
    tomography_detuning = prepare_detuning if spec.correlated_pulse_detuning else spec.detuning_rms * draws[4]
    return NoiseRealization(
        n_atoms=n_atoms,
        phase_offset=float(spec.phase_rms * draws[1]),
        prepare_detuning=float(prepare_detuning),
        tomography_detuning=float(tomography_detuning),
        power_deviation=float(spec.pulse_power_rel_rms * draws[2]),
    )


class _TwistClock:
    """Набег фазы δm·Δt + m²·∫χdt между двумя моментами."""

    def __init__(self, chi: float, detuning: float, profile: Optional[SplitProfile]):
        self.chi = chi
        self.detuning = detuning
        if profile is not None:
            self.times = profile.times - profile.times[0]
            self.cumulative = cumulative_trapezoid(profile.chi_t, self.times, initial=0.0)
        else:
            self.times = None

    def twist(self, start: float, stop: float) -> float:
        if self.times is None:
            return self.chi * (stop - start)
        return float(np.interp(stop, self.times, self.cumulative) - np.interp(start, self.times, self.cumulative))

    def phase(self, m: np.ndarray, start: float, stop: float) -> np.ndarray:
        return self.detuning * m * (stop - start) + m ** 2 * self.twist(start, stop)


def _falling(values: np.ndarray, order: int) -> np.ndarray:
    result = np.ones_like(values, dtype=float)
    for shift in range(order):
        result = result * np.clip(values - shift, 0, None)
    return result


def _channel_weights(n_atoms: int, removed0: int, removed1: int) -> np.ndarray:
    """Диагональ L†L/rate в базисе Дикке: N0^(r0)·N1^(r1)."""
    k = np.arange(n_atoms + 1)
    return _falling(n_atoms - k, removed0) * _falling(k, removed1)


@lru_cache(maxsize=512)
def _loss_table(n_atoms: int, channels: Tuple[Tuple[str, int, int, float], ...]) -> Tuple[np.ndarray, np.ndarray]:
    """Строки rate_c·w_c(k) по каналам и их сумма Γ_k."""
    weights = np.zeros((len(channels), n_atoms + 1))
    for row, (_, removed0, removed1, rate) in enumerate(channels):
        weights[row] = rate * _channel_weights(n_atoms, removed0, removed1)
    decay = weights.sum(axis=0)
    weights.flags.writeable = False
    decay.flags.writeable = False
    return weights, decay


def evolve_with_losses(
    state: CollectiveSpinState,
    chi: float,
    detuning: float,
    loss: LossSpec,
    time: float,
    seed,
    profile: Optional[SplitProfile] = None,
) -> TrajectoryResult:
    """
    Одна квантовая траектория под δSz + χSz² с потерями.

    Между скачками эволюция диагональна: фазы от δSz + χ(t)Sz² и затухание
    exp(-Γ_k t/2), Γ_k = Σ rate_c·w_c(k). Момент скачка находится из условия
    ‖ψ(t)‖² = r, канал выбирается пропорционально ‖L_c ψ‖². Операторы a0 и a1
    переводят |N, k⟩ в |N-1, k⟩ и |N-1, k-1⟩ с множителями sqrt(N0) и sqrt(N1).

    Населённости не зависят от фаз, поэтому журнал скачков при данном зерне
    одинаков для любых χ и δ.

    Args:
        state: начальное состояние
        chi: χ (рад/с), если profile не задан
        detuning: δ (рад/с)
        loss: коэффициенты потерь
        time: длительность (с)
        seed: зерно numpy.random.default_rng
        profile: χ(t) от начала участка

    Returns:
        TrajectoryResult с журналом скачков
    """
    if time < 0:
        raise ValueError(f"Время эволюции отрицательно: {time}")
    if loss.is_zero and profile is None:
        final = evolve_oat(state, detuning, chi, time)
        return TrajectoryResult(final_state=final, n_atoms=state.n_atoms)

    clock = _TwistClock(chi, detuning, profile)
    channels = tuple(loss.channels())
    rng = np.random.default_rng(seed)
    initial = np.asarray(state.amplitudes)
    base = np.abs(initial) ** 2
    # модули и фазы хранятся в индексах исходного состояния: текущий k это k + offset
    scale = np.ones(initial.size)
    phase = np.zeros(initial.size)
    offset = 0
    n_atoms = state.n_atoms
    now = 0.0
    jump_log: List[Tuple[float, str]] = []

    while n_atoms > 0:
        window = slice(offset, offset + n_atoms + 1)
        weights, decay = _loss_table(n_atoms, channels)
        probabilities = base[window] * scale[window] ** 2
        remaining = time - now
        threshold = rng.random()
        if float(np.dot(probabilities, np.exp(-decay * remaining))) >= threshold:
            break
        wait = brentq(lambda tau: float(np.dot(probabilities, np.exp(-decay * tau))) - threshold, 0.0, remaining)

        m = np.arange(n_atoms + 1) - n_atoms / 2.0
        phase[window] += clock.phase(m, now, now + wait)
        scale[window] *= np.exp(-0.5 * decay * wait)
        now += wait

        rates = weights @ (base[window] * scale[window] ** 2)
        cumulative = np.cumsum(rates)
        draw = rng.random() * cumulative[-1]
        choice = min(int(np.searchsorted(cumulative, draw, side="right")), len(channels) - 1)
        name, removed0, removed1, rate = channels[choice]
        scale[window] *= np.sqrt(weights[choice] / rate)
        offset += removed1
        n_atoms -= removed0 + removed1
        jump_log.append((now, name))
        if n_atoms > 0:
            window = slice(offset, offset + n_atoms + 1)
            scale[window] /= np.sqrt(np.dot(base[window], scale[window] ** 2))

    if n_atoms == 0:
        logger.debug("Потеряны все атомы к t = %.3e с", now)
        return TrajectoryResult(final_state=None, n_atoms=0, jump_log=jump_log)

    window = slice(offset, offset + n_atoms + 1)
    _, decay = _loss_table(n_atoms, channels)
    m = np.arange(n_atoms + 1) - n_atoms / 2.0
    phase[window] += clock.phase(m, now, time)
    scale[window] *= np.exp(-0.5 * decay * (time - now))
    final = CollectiveSpinState.normalized(n_atoms, initial[window] * scale[window] * np.exp(-1j * phase[window]))
    return TrajectoryResult(final_state=final, n_atoms=n_atoms, jump_log=jump_log)


def _contrast(state: CollectiveSpinState) -> float:
    values = expectations(state)
    return float(2.0 * np.hypot(values.sx, values.sy) / state.n_atoms)


def _prepare_and_twist(seq: SequenceSpec, realization: NoiseRealization, loss: LossSpec, seed) -> TrajectoryResult:
    pulse = seq.prepare_pulse
    prepare = replace(
        pulse,
        rabi=pulse.rabi * realization.rabi_scale,
        detuning=pulse.detuning + realization.prepare_detuning,
    )
    state = pulsed_ground_state(realization.n_atoms, prepare)
    twist = seq.twist
    result = evolve_with_losses(
        state, twist.chi, twist.free_detuning, loss, twist.duration, _child_seed(seed, 3), twist.profile,
    )
    if result.final_state is None:
        return replace(result, realized_noise=realization, contrast=0.0)
    rotated = rotate_z(result.final_state, realization.phase_offset)
    return replace(result, final_state=rotated, realized_noise=realization, contrast=_contrast(rotated))


def _finish(seq: SequenceSpec, result: TrajectoryResult) -> TrajectoryResult:
    if result.final_state is None:
        return result
    realization = result.realized_noise
    pulse = seq.tomography_pulse(realization.rabi_scale, realization.tomography_detuning)
    return replace(result, final_state=evolve_pulse(result.final_state, pulse))


def _child_seed(seed, stream: int):
    return [*np.atleast_1d(seed).tolist(), stream]


def run_sequence(seq: SequenceSpec, noise: NoiseSpec, loss: LossSpec, seed) -> TrajectoryResult:
    """
    Один выстрел: выборка шумов, полюс |0…0⟩ с выбранным N, подготовительный импульс
    (с шумом мощности и расстройки), скручивание с потерями, поворот на случайную
    фазу вокруг z и импульс томографии.

    Args:
        seq: последовательность
        noise: параметры шумов
        loss: коэффициенты потерь
        seed: зерно выстрела; потоки для потерь, измерения и изображения производные

    Returns:
        TrajectoryResult с состоянием перед детектированием
    """
    realization = sample_noise(noise, seed)
    return _finish(seq, _prepare_and_twist(seq, realization, loss, seed))


def _shot_record(index: int, theta: float, result: TrajectoryResult, seed, imaging: Optional[ImagingNoiseSpec]) -> ShotRecord:
    if result.final_state is None:
        record = ShotRecord(shot_index=index, theta=theta, n0=0.0, n1=0.0)
    else:
        m = sample_sz(result.final_state, _child_seed(seed, 1))
        half = result.n_atoms / 2.0
        record = ShotRecord(shot_index=index, theta=theta, n0=half - m, n1=half + m)
    if imaging is not None:
        record = add_imaging_noise(record, imaging, _child_seed(seed, 2))
    return record


def ensemble(
    seq: SequenceSpec,
    noise: NoiseSpec,
    loss: LossSpec,
    n_shots: int,
    base_seed: int,
    imaging: Optional[ImagingNoiseSpec] = None,
    first_index: int = 0,
    record_theta: Optional[float] = None,
) -> List[ShotRecord]:
    """
    n_shots независимых выстрелов с зёрнами base_seed + i.

    Args:
        seq, noise, loss: параметры последовательности
        n_shots: число выстрелов
        base_seed: базовое зерно
        imaging: шум изображения, добавляемый к счёту атомов
        first_index: shot_index первого выстрела
        record_theta: угол, записываемый в выстрелы (по умолчанию seq.tomography_angle)

    Returns:
        Список ShotRecord в порядке выстрелов
    """
    if n_shots < 1:
        raise ValueError(f"Число выстрелов должно быть >= 1: {n_shots}")
    theta = seq.tomography_angle if record_theta is None else record_theta
    records = []
    for i in range(n_shots):
        seed = base_seed + i
        result = run_sequence(seq, noise, loss, seed)
        records.append(_shot_record(first_index + i, theta, result, seed, imaging))
    return records


def _finish_group(seqs: Sequence[SequenceSpec], results: Sequence[TrajectoryResult]) -> List[TrajectoryResult]:
    """Импульсы томографии для выстрелов с одинаковым N порциями по PULSE_BATCH столбцов."""
    finished = list(results)
    alive = [j for j, result in enumerate(results) if result.final_state is not None]
    for start in range(0, len(alive), PULSE_BATCH):
        batch = alive[start:start + PULSE_BATCH]
        pulses = []
        for j in batch:
            realization = results[j].realized_noise
            pulses.append(seqs[j].tomography_pulse(realization.rabi_scale, realization.tomography_detuning))
        states = evolve_pulses([results[j].final_state for j in batch], pulses)
        for j, state in zip(batch, states):
            finished[j] = replace(results[j], final_state=state)
    return finished


def _scan_chunk(
    seq: SequenceSpec,
    noise: NoiseSpec,
    loss: LossSpec,
    imaging: Optional[ImagingNoiseSpec],
    task: Tuple[Tuple[float, ...], int, int, int, int],
) -> List[ShotRecord]:
    thetas, base_seed, n_shots, start, stop = task
    twisted = []
    for t, theta in enumerate(thetas):
        angled = seq.with_angle(theta)
        for i in range(start, stop):
            index = t * n_shots + i
            seed = base_seed + index
            result = _prepare_and_twist(angled, sample_noise(noise, seed), loss, seed)
            twisted.append((result.n_atoms, index, theta, seed, angled, result))

    # внешний цикл по N, внутренний по θ: собственная система Sx строится один раз на N
    twisted.sort(key=lambda item: item[:2])
    records = []
    for _, group in groupby(twisted, key=lambda item: item[0]):
        group = list(group)
        finished = _finish_group([item[4] for item in group], [item[5] for item in group])
        for (_, index, theta, seed, _, _), result in zip(group, finished):
            records.append(_shot_record(index, theta, result, seed, imaging))
    return records


def ensemble_scan(
    seq: SequenceSpec,
    thetas: Sequence[float],
    noise: NoiseSpec,
    loss: LossSpec,
    n_shots: int,
    base_seed: int,
    imaging: Optional[ImagingNoiseSpec] = None,
    workers: Optional[int] = None,
    chunk_size: int = 500,
) -> List[ShotRecord]:
    """
    Ансамбли для набора углов θ.

    Угол с номером t использует зёрна base_seed + t·n_shots + i и shot_index
    t·n_shots + i, поэтому результат совпадает с последовательными вызовами ensemble.
    Порция содержит выстрелы i из [start, start + chunk_size) для всех углов сразу;
    внутри порции импульсы томографии выполняются пакетами по числу атомов.
    При workers > 1 порции считаются в пуле процессов. Выстрелы возвращаются
    по возрастанию shot_index.
    """
    if n_shots < 1:
        raise ValueError(f"Число выстрелов должно быть >= 1: {n_shots}")
    if chunk_size < 1:
        raise ValueError(f"Размер порции должен быть >= 1: {chunk_size}")
    angles = tuple(float(theta) for theta in thetas)
    tasks = [
        (angles, base_seed, n_shots, start, min(start + chunk_size, n_shots))
        for start in range(0, n_shots, chunk_size)
    ]

    runner = partial(_scan_chunk, seq, noise, loss, imaging)
    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(runner, tasks))
    else:
        chunks = [runner(task) for task in tasks]
    logger.info("Смоделировано %d выстрелов для %d углов", n_shots * len(angles), len(angles))
    records = [record for chunk in chunks for record in chunk]
    records.sort(key=lambda record: record.shot_index)
    return records


def twist_floor_db(
    twist: TwistSpec,
    n_atoms: int,
    loss: LossSpec,
    trajectories: int = 64,
    seed: int = 0,
    rabi: float = DEFAULT_RABI,
) -> float:
    """
    Минимальная нормированная дисперсия после скручивания без технических шумов (дБ).

    Ковариация (Sy, Sz) усредняется по траекториям с потерями вместе с разбросом
    средних, как в томограмме по выстрелам; нормировка на среднее конечное N.
    Зёрна траекторий [seed, j] не зависят от twist, поэтому результат гладко
    зависит от ∫χdt.
    """
    if trajectories < 2:
        raise ValueError(f"Нужно хотя бы две траектории: {trajectories}")
    prepare = SequenceSpec.standard(twist, rabi=rabi).prepare_pulse
    state = pulsed_ground_state(n_atoms, prepare)
    means, covariances, atoms = [], [], []
    for j in range(trajectories):
        result = evolve_with_losses(state, twist.chi, 0.0, loss, twist.duration, [seed, j], twist.profile)
        if result.final_state is None:
            continue
        values = expectations(result.final_state)
        means.append((values.sy, values.sz))
        covariances.append(values.cov_yz)
        atoms.append(result.n_atoms)
    if len(means) < 2:
        raise CalibrationError("Почти все траектории потеряли все атомы")
    pooled = np.mean(covariances, axis=0) + np.cov(np.array(means).T, bias=True)
    return to_db(4.0 * float(np.linalg.eigvalsh(pooled)[0]) / float(np.mean(atoms)))


def _analytic_twist(n_atoms: int, target_db: float) -> Tuple[float, float]:
    def normalized_db(twist: float) -> float:
        return to_db(4.0 * oat_min_variance(n_atoms, twist) / n_atoms)

    upper = min(np.pi / 2, 4.0 * n_atoms ** (-2.0 / 3.0))
    best = minimize_scalar(normalized_db, bounds=(1e-12, upper), method="bounded", options={"xatol": 1e-12})
    if best.fun > target_db:
        raise CalibrationError(
            f"Уровень {target_db} дБ недостижим при N = {n_atoms} (минимум {best.fun:.2f} дБ)", target_db,
        )
    twist = brentq(lambda value: normalized_db(value) - target_db, 1e-12, best.x, xtol=1e-15)
    return float(twist), float(best.x)


def calibrate_twist(
    n_atoms: int,
    target_db: float = -12.8,
    loss: Optional[LossSpec] = None,
    twist: Optional[TwistSpec] = None,
    trajectories: int = 64,
    seed: int = 0,
) -> float:
    """
    ∫χdt, при котором минимальная дисперсия после скручивания без технических шумов
    равна target_db (на восходящей ветви сжатия, до оптимума).

    Без потерь используется аналитическая дисперсия одноосного скручивания. С потерями
    аналитическое значение служит начальной точкой, а уровень считается по траекториям
    (twist_floor_db) для формы χ(t) из twist; корень уточняется методом Брента.

    Raises:
        ValueError: target_db >= 0 или для потерь не задан twist
        CalibrationError: уровень недостижим
    """
    if target_db >= 0:
        raise ValueError(f"Целевой уровень должен быть < 0 дБ: {target_db}")
    analytic, optimum = _analytic_twist(n_atoms, target_db)
    if loss is None or loss.is_zero:
        logger.info("Калибровка скручивания: ∫χdt = %.6e рад для %.1f дБ", analytic, target_db)
        return analytic
    if twist is None:
        raise ValueError("Для калибровки с потерями нужна форма скручивания (TwistSpec)")

    shape = replace(twist, free_detuning=0.0)

    def excess(value: float) -> float:
        return twist_floor_db(shape.with_twist_integral(value), n_atoms, loss, trajectories, seed) - target_db

    if excess(analytic) > 0:
        lower, upper = analytic, analytic * CALIBRATION_STEP
        while excess(upper) > 0:
            if upper > optimum:
                raise CalibrationError(f"Уровень {target_db} дБ недостижим с потерями при N = {n_atoms}", target_db)
            lower, upper = upper, upper * CALIBRATION_STEP
    else:
        lower, upper = analytic / CALIBRATION_STEP, analytic
        while excess(lower) <= 0:
            lower, upper = lower / CALIBRATION_STEP, lower
    value = brentq(excess, lower, upper, xtol=1e-9 * analytic)
    logger.info(
        "Калибровка скручивания с потерями: ∫χdt = %.6e рад для %.1f дБ (без потерь %.6e)",
        value, target_db, analytic,
    )
    return float(value)
