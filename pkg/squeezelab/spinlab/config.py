"""
Конфигурация запуска: INI-файл с секциями, каждая секция - pydantic-модель.

Все физические величины в ключах несут единицы (_hz, _um, _ms, _deg, _per_s, _bohr, _atoms).
Неизвестные секции и ключи отклоняются, ошибки сообщаются как `секция.ключ: сообщение`.
"""

import configparser
import logging
from typing import Annotated, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, field_validator, model_validator

from dynamics_noise import LossSpec, NoiseSpec
from mode_model import RB87_MASS, ScatteringSpec, TrapSpec
from tomography import ImagingNoiseSpec

logger = logging.getLogger(__name__)

ATOMIC_MASS_UNIT = 1.66053906660e-27


class ConfigError(ValueError):
    """Ошибка чтения или проверки конфигурации."""


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.replace("\n", ",").split(",") if item.strip()]
    return value


# список через запятую, например "-90, -45, 0"
FloatList = Annotated[List[float], BeforeValidator(_split_list)]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class RunSection(_Section):
    seed: int = Field(20240601, ge=0, lt=2 ** 64)
    shots: int = Field(300, ge=2)
    output_dir: Optional[str] = None
    workers: int = Field(1, ge=1)
    chunk_size: int = Field(500, ge=1)


class PhysicsSection(_Section):
    n_atoms: int = Field(1250, ge=1)
    rabi_hz: float = Field(2100.0, gt=0)
    tomography_phase_rule: Literal["clockwise", "counterclockwise"] = "clockwise"
    f_long_hz: float = Field(109.0, gt=0)
    f_ax_hz: float = Field(500.0, gt=0)
    a00_bohr: float = Field(100.4, gt=0)
    a01_bohr: float = Field(97.7, gt=0)
    a11_bohr: float = Field(95.0, gt=0)
    mass_amu: float = Field(RB87_MASS / ATOMIC_MASS_UNIT, gt=0)
    # только для записи условий эксперимента
    b0_gauss: float = 3.36
    delta_mw_hz: float = 0.0


class SequenceSection(_Section):
    twist_mode: Literal["none", "constant", "profile"] = "none"
    duration_ms: float = Field(12.7, ge=0)
    separation_um: float = Field(0.52, ge=0)
    chi_per_s: Optional[float] = None
    target_floor_db: Optional[float] = Field(None, lt=0)
    free_detuning_hz: float = 0.0
    theta_deg: FloatList = Field(default_factory=lambda: [float(value) for value in range(-90, 91, 15)])
    amplitude_scale: float = Field(1.0, ge=0)
    profile_samples: int = Field(201, ge=3)
    profile_table_points: int = Field(9, ge=2)

    @field_validator("theta_deg")
    @classmethod
    def _distinct_angles(cls, value):
        if not value:
            raise ValueError("список углов пуст")
        if len(set(value)) != len(value):
            raise ValueError("углы повторяются")
        return value

    @model_validator(mode="after")
    def _twist_source(self):
        if self.twist_mode != "none" and self.chi_per_s is not None and self.target_floor_db is not None:
            raise ValueError("chi_per_s и target_floor_db заданы одновременно")
        if self.twist_mode == "constant" and self.chi_per_s is None and self.target_floor_db is None:
            raise ValueError("для twist_mode = constant нужен chi_per_s или target_floor_db")
        if self.twist_mode == "profile" and self.chi_per_s is not None:
            raise ValueError("chi_per_s не используется при twist_mode = profile, масштаб задаётся target_floor_db")
        if self.twist_mode != "none" and self.duration_ms == 0:
            raise ValueError("скручивание нулевой длительности")
        return self


class NoiseSection(_Section):
    phase_rms_deg: float = Field(0.0, ge=0)
    detuning_rms_hz: float = Field(0.0, ge=0)
    pulse_power_rel_rms: float = Field(0.0, ge=0)
    atom_number_rms_atoms: float = Field(0.0, ge=0)
    correlated_pulse_detuning: bool = False


class LossSection(_Section):
    rate1_0_per_s: float = Field(0.0, ge=0)
    rate1_1_per_s: float = Field(0.0, ge=0)
    rate2_00_per_s: float = Field(0.0, ge=0)
    rate2_01_per_s: float = Field(0.0, ge=0)
    rate2_11_per_s: float = Field(0.0, ge=0)
    rate3_000_per_s: float = Field(0.0, ge=0)
    rate3_111_per_s: float = Field(0.0, ge=0)


class ImagingSection(_Section):
    combined_atoms: Optional[float] = Field(None, ge=0)
    sigma_n0_atoms: float = Field(0.0, ge=0)
    sigma_n1_atoms: float = Field(0.0, ge=0)
    apply_to_simulation: bool = True

    @model_validator(mode="after")
    def _one_source(self):
        if self.combined_atoms is not None and (self.sigma_n0_atoms or self.sigma_n1_atoms):
            raise ValueError("combined_atoms и sigma_n*_atoms заданы одновременно")
        return self


class AnalysisSection(_Section):
    contrast: float = Field(1.0, gt=0, le=1)
    post_select_half_width_atoms: Optional[float] = Field(None, gt=0)
    drift_window: int = Field(300, ge=3)
    drift_order: int = Field(2, ge=0)
    drift_min_deg: float = 90.0
    drift_max_deg: float = 360.0
    drift_correction: bool = True
    calibration_theta_deg: float = 0.0
    calibration_bin_width_atoms: float = Field(100.0, gt=0)
    calibration_min_count: int = Field(10, ge=2)
    calibration_count_scale: float = Field(1.0, gt=0)


class ReconstructSection(_Section):
    grid_points: int = Field(257, ge=17)
    s_points: int = Field(257, ge=17)
    filter: Literal["ram-lak", "hann"] = "hann"
    contour_fraction: float = Field(float(np.exp(-0.5)), gt=0, lt=1)


class ModesSection(_Section):
    separations_um: FloatList = Field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4, 0.52, 0.7, 1.0, 2.0, 4.0])
    grid_points: int = Field(512, ge=32)
    time_step: float = Field(0.02, gt=0)
    tolerance: float = Field(1e-10, gt=0)
    max_iterations: int = Field(400_000, ge=1)
    fd_step_atoms: Optional[float] = Field(None, gt=0)

    @field_validator("separations_um")
    @classmethod
    def _sorted(cls, value):
        if not value:
            raise ValueError("список смещений пуст")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("смещения должны строго возрастать")
        if value[0] < 0:
            raise ValueError("смещения должны быть >= 0")
        return value

    def solver_options(self) -> dict:
        return {
            "points": self.grid_points,
            "time_step": self.time_step,
            "tolerance": self.tolerance,
            "max_iterations": self.max_iterations,
        }


class RunConfig(_Section):
    run: RunSection = Field(default_factory=RunSection)
    physics: PhysicsSection = Field(default_factory=PhysicsSection)
    sequence: SequenceSection = Field(default_factory=SequenceSection)
    noise: NoiseSection = Field(default_factory=NoiseSection)
    loss: LossSection = Field(default_factory=LossSection)
    imaging: ImagingSection = Field(default_factory=ImagingSection)
    analysis: AnalysisSection = Field(default_factory=AnalysisSection)
    reconstruct: ReconstructSection = Field(default_factory=ReconstructSection)
    modes: ModesSection = Field(default_factory=ModesSection)

    @property
    def rabi(self) -> float:
        return 2 * np.pi * self.physics.rabi_hz

    @property
    def thetas(self) -> List[float]:
        """Углы томографии в радианах."""
        return [float(np.radians(value)) for value in self.sequence.theta_deg]

    def noise_spec(self) -> NoiseSpec:
        return NoiseSpec(
            phase_rms=float(np.radians(self.noise.phase_rms_deg)),
            detuning_rms=2 * np.pi * self.noise.detuning_rms_hz,
            pulse_power_rel_rms=self.noise.pulse_power_rel_rms,
            atom_number_mean=float(self.physics.n_atoms),
            atom_number_rms=self.noise.atom_number_rms_atoms,
            correlated_pulse_detuning=self.noise.correlated_pulse_detuning,
        )

    def loss_spec(self) -> LossSpec:
        return LossSpec(**{
            name[: -len("_per_s")]: value for name, value in self.loss.model_dump().items()
        })

    def imaging_spec(self) -> ImagingNoiseSpec:
        if self.imaging.combined_atoms is not None:
            return ImagingNoiseSpec.from_combined(self.imaging.combined_atoms)
        return ImagingNoiseSpec(sigma_n0=self.imaging.sigma_n0_atoms, sigma_n1=self.imaging.sigma_n1_atoms)

    def trap_spec(self, separation_um: Optional[float] = None) -> TrapSpec:
        separation = self.sequence.separation_um if separation_um is None else separation_um
        return TrapSpec(
            f_long=self.physics.f_long_hz,
            f_ax=self.physics.f_ax_hz,
            separation=separation * 1e-6,
        )

    def scattering_spec(self) -> ScatteringSpec:
        return ScatteringSpec(
            a00=self.physics.a00_bohr,
            a01=self.physics.a01_bohr,
            a11=self.physics.a11_bohr,
            mass=self.physics.mass_amu * ATOMIC_MASS_UNIT,
        )

    def with_overrides(self, seed: Optional[int] = None, shots: Optional[int] = None, output_dir: Optional[str] = None) -> "RunConfig":
        """Копия с подставленными значениями флагов --seed, --shots, --out."""
        updates = {
            key: value
            for key, value in (("seed", seed), ("shots", shots), ("output_dir", output_dir))
            if value is not None
        }
        if not updates:
            return self
        data = self.run.model_dump()
        data.update(updates)
        try:
            run = RunSection.model_validate(data)
        except ValidationError as exc:
            raise ConfigError(format_validation_error(exc, prefix="run")) from None
        return self.model_copy(update={"run": run})


def format_validation_error(exc: ValidationError, prefix: str = "") -> str:
    messages = []
    for error in exc.errors():
        location = [str(part) for part in error["loc"]]
        if prefix:
            location.insert(0, prefix)
        # ошибки model_validator приходят без ключа
        name = ".".join(location) if location else "config"
        messages.append(f"{name}: {error['msg']}")
    return "; ".join(messages)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """
    Разбирает INI-текст в RunConfig.

    Raises:
        ConfigError: синтаксическая ошибка (с номером строки), неизвестная секция или ключ,
            недопустимое значение
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None

    data = {}
    for section in parser.sections():
        if section not in RunConfig.model_fields:
            raise ConfigError(f"{source}: неизвестная секция [{section}]")
        data[section] = dict(parser.items(section))
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {format_validation_error(exc)}") from None
    logger.debug("Конфигурация %s прочитана", source)
    return config


def load_config(path: Optional[str]) -> RunConfig:
    """Читает конфигурацию из файла; без пути возвращает значения по умолчанию."""
    if path is None:
        return RunConfig()
    try:
        with open(path, "r", encoding="utf-8") as stream:
            text = stream.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    return parse_config(text, source=path)
