"""
Модуль для точной динамики коллективного спина в базисе Дикке |S=N/2, m⟩.

Индекс k = m + N/2 пробегает 0..N, поэтому N1 = k, N0 = N - k.
Гамильтониан H/ħ = δ Sz + Ω S_φ + χ Sz², где S_φ = cos φ Sx - sin φ Sy.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln, xlogy

from .exceptions import InvalidStateError

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-10


@dataclass(frozen=True)
class CollectiveSpinState:
    """
    Волновая функция внутреннего состояния N атомов в симметричном подпространстве.

    Амплитуды хранятся по возрастанию m: от -N/2 до +N/2.
    """

    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_atoms < 1:
            raise InvalidStateError(f"Число атомов должно быть >= 1, получено {self.n_atoms}")
        amplitudes = np.array(self.amplitudes, dtype=complex)
        if amplitudes.shape != (self.n_atoms + 1,):
            raise InvalidStateError(
                f"Ожидалось {self.n_atoms + 1} амплитуд, получено {amplitudes.shape}"
            )
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise InvalidStateError(f"Состояние не нормировано: |ψ|² = {norm:.12f}")
        amplitudes.flags.writeable = False
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def spin(self) -> float:
        return self.n_atoms / 2.0

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(self.n_atoms + 1) - self.n_atoms / 2.0

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def normalized(cls, n_atoms: int, amplitudes: np.ndarray) -> "CollectiveSpinState":
        """Создаёт состояние, предварительно нормируя амплитуды."""
        amplitudes = np.asarray(amplitudes, dtype=complex)
        norm = np.sqrt(np.vdot(amplitudes, amplitudes).real)
        if norm == 0:
            raise InvalidStateError("Нулевой вектор нельзя нормировать")
        return cls(n_atoms, amplitudes / norm)


@dataclass(frozen=True)
class SpinExpectations:
    """Средние значения компонент спина и ковариация (Sy, Sz)."""

    sx: float
    sy: float
    sz: float
    cov_yz: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class PulseSpec:
    """
    Импульс связи |0⟩ ↔ |1⟩.

    Args:
        rabi: частота Раби Ω (рад/с)
        phase: фаза φ (рад)
        detuning: расстройка δ (рад/с)
        duration: длительность τ (с)
    """

    rabi: float
    phase: float = 0.0
    detuning: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        if self.duration < 0:
            raise InvalidStateError(f"Длительность импульса отрицательна: {self.duration}")
        if self.rabi < 0:
            raise InvalidStateError(f"Частота Раби отрицательна: {self.rabi}")

    @property
    def area(self) -> float:
        return self.rabi * self.duration

    @classmethod
    def for_angle(cls, rabi: float, angle: float, phase: float = 0.0, detuning: float = 0.0) -> "PulseSpec":
        """Импульс, поворачивающий спин на угол angle при нулевой расстройке."""
        if rabi <= 0:
            raise InvalidStateError("Для импульса заданной площади нужна Ω > 0")
        return cls(rabi=rabi, phase=phase, detuning=detuning, duration=abs(angle) / rabi)


class SpinOperators:
    """
    Неизменяемый набор данных для заданного N: m, лестничные коэффициенты
    и собственная система Sx (трёхдиагональная матрица).

    Экземпляры кэшируются через spin_operators() и могут разделяться между потоками.
    """

    def __init__(self, n_atoms: int):
        self.n_atoms = n_atoms
        self.spin = n_atoms / 2.0
        self.m = np.arange(n_atoms + 1) - self.spin
        # ⟨m+1|S+|m⟩ = sqrt(S(S+1) - m(m+1))
        ladder = np.sqrt(np.clip(self.spin * (self.spin + 1) - self.m[:-1] * (self.m[:-1] + 1), 0.0, None))
        ladder.flags.writeable = False
        self.m.flags.writeable = False
        self.ladder = ladder
        self._sx_eigensystem: Optional[Tuple[np.ndarray, np.ndarray]] = None

    @property
    def sx_eigensystem(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._sx_eigensystem is None:
            values, vectors = eigh_tridiagonal(np.zeros(self.n_atoms + 1), self.ladder / 2.0)
            values.flags.writeable = False
            vectors.flags.writeable = False
            self._sx_eigensystem = (values, vectors)
        return self._sx_eigensystem

    def rotate_x(self, amplitudes: np.ndarray, angle) -> np.ndarray:
        """
        exp(-i·angle·Sx)|ψ⟩ через собственное разложение Sx.

        amplitudes может быть матрицей (N + 1, K), тогда angle задаётся скаляром
        или массивом из K углов, по одному на столбец.
        """
        values, vectors = self.sx_eigensystem
        phases = np.exp(-1j * np.multiply.outer(values, angle))
        return _real_matmul(vectors, phases * _real_matmul(vectors.T, amplitudes))


def _real_matmul(matrix: np.ndarray, amplitudes: np.ndarray) -> np.ndarray:
    # вещественная матрица на комплексные столбцы без копии матрицы в complex128
    return matrix @ amplitudes.real + 1j * (matrix @ amplitudes.imag)


@lru_cache(maxsize=16)
def spin_operators(n_atoms: int) -> SpinOperators:
    if n_atoms < 1:
        raise InvalidStateError(f"Число атомов должно быть >= 1, получено {n_atoms}")
    return SpinOperators(n_atoms)


def make_coherent_state(n_atoms: int, polar: float, azimuth: float) -> CollectiveSpinState:
    """
    Когерентное спиновое состояние, направленное вдоль (polar, azimuth).

    polar = 0 соответствует полюсу m = +N/2 (все атомы в |1⟩).

    Args:
        n_atoms: число атомов N
        polar: полярный угол (рад)
        azimuth: азимутальный угол (рад)

    Returns:
        Нормированное CollectiveSpinState
    """
    if n_atoms < 1:
        raise InvalidStateError(f"Число атомов должно быть >= 1, получено {n_atoms}")
    k = np.arange(n_atoms + 1)
    cos_half = np.cos(polar / 2.0)
    sin_half = np.sin(polar / 2.0)
    log_binomial = 0.5 * (gammaln(n_atoms + 1) - gammaln(k + 1) - gammaln(n_atoms - k + 1))
    log_modulus = log_binomial + xlogy(k, abs(cos_half)) + xlogy(n_atoms - k, abs(sin_half))
    sign = np.where(cos_half < 0, (-1.0) ** k, 1.0) * np.where(sin_half < 0, (-1.0) ** (n_atoms - k), 1.0)
    m = k - n_atoms / 2.0
    amplitudes = sign * np.exp(log_modulus) * np.exp(-1j * m * azimuth)
    return CollectiveSpinState.normalized(n_atoms, amplitudes)


def pole_state(n_atoms: int, up: bool = True) -> CollectiveSpinState:
    """Все атомы в |1⟩ (up=True, m = +N/2) или в |0⟩ (m = -N/2)."""
    amplitudes = np.zeros(n_atoms + 1, dtype=complex)
    amplitudes[-1 if up else 0] = 1.0
    return CollectiveSpinState(n_atoms, amplitudes)


def apply_rotation(state: CollectiveSpinState, axis_azimuth: float, angle: float) -> CollectiveSpinState:
    """
    Точный поворот exp(-iθ S_φ)|ψ⟩.

    S_φ = D Sx D†, D = diag(e^{ikφ}), поэтому достаточно собственной системы Sx.
    """
    if angle == 0:
        return state
    ops = spin_operators(state.n_atoms)
    gauge = np.exp(1j * axis_azimuth * np.arange(state.n_atoms + 1))
    rotated = gauge * ops.rotate_x(np.conj(gauge) * state.amplitudes, angle)
    return CollectiveSpinState.normalized(state.n_atoms, rotated)


def rotate_z(state: CollectiveSpinState, angle: float) -> CollectiveSpinState:
    """Поворот вокруг z: exp(-i·angle·Sz)."""
    if angle == 0:
        return state
    return CollectiveSpinState(state.n_atoms, state.amplitudes * np.exp(-1j * angle * state.m_values))


def evolve_oat(state: CollectiveSpinState, detuning: float, chi: float, time: float) -> CollectiveSpinState:
    """
    Свободная эволюция под δSz + χSz²: диагональные фазы exp(-i(δm + χm²)t).

    Args:
        state: исходное состояние
        detuning: δ (рад/с)
        chi: χ (рад/с)
        time: t >= 0 (с)

    Returns:
        Новое состояние; распределение Sz не меняется
    """
    if time < 0:
        raise InvalidStateError(f"Время эволюции отрицательно: {time}")
    m = state.m_values
    return CollectiveSpinState(state.n_atoms, state.amplitudes * np.exp(-1j * (detuning * m + chi * m ** 2) * time))


def su2_euler_angles(pulse: PulseSpec) -> Tuple[float, float, float]:
    """
    Углы Эйлера (ZYZ) поворота exp(-iτ(δSz + ΩS_φ)), вычисленные в представлении спина 1/2.

    Returns:
        (alpha, beta, gamma): U = Rz(alpha)·Ry(beta)·Rz(gamma)
    """
    n_vec = np.array([pulse.rabi * np.cos(pulse.phase), -pulse.rabi * np.sin(pulse.phase), pulse.detuning])
    frequency = float(np.linalg.norm(n_vec))
    if frequency == 0.0 or pulse.duration == 0.0:
        return 0.0, 0.0, 0.0
    nx, ny, nz = n_vec / frequency
    half = frequency * pulse.duration / 2.0
    a = np.cos(half) - 1j * np.sin(half) * nz
    b = -1j * np.sin(half) * (nx + 1j * ny)
    beta = 2.0 * np.arctan2(abs(b), abs(a))
    total = -2.0 * np.angle(a) if abs(a) > 1e-14 else 0.0
    difference = 2.0 * np.angle(b) if abs(b) > 1e-14 else 0.0
    return (total + difference) / 2.0, float(beta), (total - difference) / 2.0


def evolve_pulse(state: CollectiveSpinState, pulse: PulseSpec, chi: float = 0.0) -> CollectiveSpinState:
    """
    Эволюция под полным H = δSz + ΩS_φ + χSz² в течение τ.

    При χ = 0 генератор является элементом su(2), и поворот раскладывается на углы Эйлера
    с кэшированной собственной системой Sx. Иначе диагонализуется вещественная
    трёхдиагональная матрица D†HD.
    """
    if pulse.duration == 0:
        return state
    if chi == 0.0:
        alpha, beta, gamma = su2_euler_angles(pulse)
        rotated = rotate_z(state, gamma)
        rotated = apply_rotation(rotated, -np.pi / 2.0, beta)
        return rotate_z(rotated, alpha)

    ops = spin_operators(state.n_atoms)
    diagonal = pulse.detuning * ops.m + chi * ops.m ** 2
    values, vectors = eigh_tridiagonal(diagonal, pulse.rabi * ops.ladder / 2.0)
    gauge = np.exp(1j * pulse.phase * np.arange(state.n_atoms + 1))
    phases = np.exp(-1j * values * pulse.duration)
    evolved = _real_matmul(vectors, phases * _real_matmul(vectors.T, np.conj(gauge) * state.amplitudes))
    return CollectiveSpinState.normalized(state.n_atoms, gauge * evolved)


def evolve_pulses(states: Sequence[CollectiveSpinState], pulses: Sequence[PulseSpec]) -> List[CollectiveSpinState]:
    """
    Импульсы без нелинейности для набора состояний с одинаковым N, по импульсу на состояние.

    Те же углы Эйлера, что и в evolve_pulse, но поворот вокруг оси φ = -π/2 для всех
    столбцов выполняется двумя матричными произведениями с собственной системой Sx.

    Raises:
        InvalidStateError: разные N или длины списков не совпадают
    """
    if len(states) != len(pulses):
        raise InvalidStateError(f"Состояний {len(states)}, импульсов {len(pulses)}")
    if not states:
        return []
    n_atoms = states[0].n_atoms
    if any(state.n_atoms != n_atoms for state in states):
        raise InvalidStateError("Пакетный импульс требует одинакового N")

    ops = spin_operators(n_atoms)
    alpha, beta, gamma = np.array([su2_euler_angles(pulse) for pulse in pulses]).T
    gauge = np.exp(-0.5j * np.pi * np.arange(n_atoms + 1))[:, None]
    columns = np.column_stack([state.amplitudes for state in states]) * np.exp(-1j * np.outer(ops.m, gamma))
    columns = gauge * ops.rotate_x(np.conj(gauge) * columns, beta)
    columns = columns * np.exp(-1j * np.outer(ops.m, alpha))
    return [CollectiveSpinState.normalized(n_atoms, columns[:, j]) for j in range(len(states))]


def expectations(state: CollectiveSpinState) -> SpinExpectations:
    """
    ⟨Sx⟩, ⟨Sy⟩, ⟨Sz⟩ и ковариационная матрица (Sy, Sz) через лестничные операторы.
    """
    ops = spin_operators(state.n_atoms)
    c = state.amplitudes
    probs = state.probabilities
    m = ops.m

    sz = float(np.dot(probs, m))
    sz2 = float(np.dot(probs, m ** 2))
    s_plus = np.sum(np.conj(c[1:]) * c[:-1] * ops.ladder)
    if state.n_atoms >= 2:
        s_plus2 = np.sum(np.conj(c[2:]) * c[:-2] * ops.ladder[:-1] * ops.ladder[1:])
    else:
        s_plus2 = 0.0
    anti = np.sum(np.conj(c[1:]) * c[:-1] * ops.ladder * (2 * m[:-1] + 1))

    sx = float(s_plus.real)
    sy = float(s_plus.imag)
    casimir = ops.spin * (ops.spin + 1)
    sy2 = 0.5 * (casimir - sz2) - 0.5 * float(np.real(s_plus2))

    var_y = sy2 - sy ** 2
    var_z = sz2 - sz ** 2
    cov = 0.5 * float(anti.imag) - sy * sz
    cov_yz = np.array([[var_y, cov], [cov, var_z]])
    cov_yz.flags.writeable = False
    return SpinExpectations(sx=sx, sy=sy, sz=sz, cov_yz=cov_yz)


def quadrature_variance(cov_yz: np.ndarray, theta: float) -> float:
    """Var(cos θ Sz - sin θ Sy) по ковариационной матрице (Sy, Sz)."""
    c, s = np.cos(theta), np.sin(theta)
    return float(c * c * cov_yz[1, 1] + s * s * cov_yz[0, 0] - 2 * c * s * cov_yz[0, 1])


def variance_along(state: CollectiveSpinState, theta: float) -> float:
    """ΔS_θ² для S_θ = cos θ Sz - sin θ Sy."""
    return quadrature_variance(expectations(state).cov_yz, theta)


def sample_sz(state: CollectiveSpinState, rng_seed) -> float:
    """
    Проективное измерение Sz по распределению Борна |c_m|².

    Args:
        state: состояние перед детектированием
        rng_seed: зерно (int или последовательность int для numpy.random.default_rng)

    Returns:
        Значение m (полуцелое при нечётном N)
    """
    rng = np.random.default_rng(rng_seed)
    probs = state.probabilities
    index = rng.choice(state.n_atoms + 1, p=probs / probs.sum())
    return float(index - state.n_atoms / 2.0)


def pulsed_ground_state(n_atoms: int, pulse: PulseSpec) -> CollectiveSpinState:
    """
    Состояние |0…0⟩ (m = -N/2) после импульса без нелинейности.

    Поворот полюса даёт когерентное состояние, поэтому результат строится по углам
    Эйлера без диагонализации; совпадает с evolve_pulse с точностью до глобальной фазы.
    """
    alpha, beta, _ = su2_euler_angles(pulse)
    return make_coherent_state(n_atoms, np.pi - beta, np.pi + alpha)
