"""运行配置: JSON 读取、默认值 (参考参数) 与校验"""
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Tuple

from interferometer.paths import PULSE_RULES
from interferometer.sequence import RamseyBordeConfig
from ladder.base import GaussianInit, StepControl
from ladder.errors import ConfigError
from ladder.units import CONSTANTS, MIN_FREQUENCY_RATIO, LaserConfig, ScaledUnits, frequency_ratio

logger = logging.getLogger(__name__)

# 每 μm² 到每 m² 的换算
PER_UM2 = 1e12


@dataclass
class LaserSection:
    wavelength_nm: float = 1064.0
    intensity_1_w_per_um2: float = 0.5
    intensity_2_w_per_um2: float = 0.5
    phase_1_rad: float = 0.0
    phase_2_rad: float = 0.0
    polarization: str = "linear-xy"

    def validate(self):
        _check(self.wavelength_nm > 0, 'laser.wavelength_nm', "必须为正")
        _check(
            frequency_ratio(self.wavelength_nm * 1e-9) > MIN_FREQUENCY_RATIO,
            'laser.wavelength_nm', f"ω/ω_rec 必须大于 {MIN_FREQUENCY_RATIO:.0e}"
        )
        _check(self.intensity_1_w_per_um2 > 0, 'laser.intensity_1_w_per_um2', "必须为正")
        _check(self.intensity_2_w_per_um2 > 0, 'laser.intensity_2_w_per_um2', "必须为正")


@dataclass
class WavepacketSection:
    width_w_m: float = 3e-6
    mean_velocity_mps: float = 0.0

    def validate(self):
        _check(self.width_w_m > 0, 'wavepacket.width_w_m', "必须为正")


@dataclass
class SequenceSection:
    T_ns: float = 12.0
    T_prime_ns: float = 10.0
    T_doubleprime_ns: float = 40.0
    acceleration_mps2: float = 1e10

    def validate(self):
        for name in ('T_ns', 'T_prime_ns', 'T_doubleprime_ns'):
            _check(getattr(self, name) >= 0, f'sequence.{name}', "不能为负")


@dataclass
class NumericsSection:
    kbar_points: int = 512
    ladder_max: int = 5
    spatial_points: int = 4096
    window_um: list = field(default_factory=lambda: [-150.0, 150.0])
    span_sigmas: float = 6.0
    norm_tolerance: float = 1e-8
    truncation_tolerance: float = 1e-6

    def validate(self):
        _check(self.kbar_points >= 3, 'numerics.kbar_points', "至少为 3")
        _check(self.ladder_max >= 1, 'numerics.ladder_max', "至少为 1")
        _check(self.spatial_points >= 2, 'numerics.spatial_points', "至少为 2")
        _check(
            len(self.window_um) == 2 and all(_is_number(v) for v in self.window_um)
            and self.window_um[0] < self.window_um[1],
            'numerics.window_um', "必须是 [min, max] 且 min < max"
        )
        _check(self.span_sigmas > 0, 'numerics.span_sigmas', "必须为正")
        _check(self.norm_tolerance > 0, 'numerics.norm_tolerance', "必须为正")
        _check(self.truncation_tolerance > 0, 'numerics.truncation_tolerance', "必须为正")


@dataclass
class SplitterSection:
    points: int = 41
    span_factor: float = 4.0

    def validate(self):
        _check(self.points >= 2, 'splitter.points', "至少为 2")
        _check(self.span_factor > 0, 'splitter.span_factor', "必须为正")


@dataclass
class SweepSection:
    points: int = 25

    def validate(self):
        _check(self.points >= 1, 'sweep.points', "至少为 1")


@dataclass
class AnalysisSection:
    pulse_rule: str = "coherent"
    smoothing_um: float = 1.0
    peak_threshold: float = 1e-4
    min_peak_mass: float = 5e-3
    resolve_factor: float = 3.0

    def validate(self):
        _check(self.pulse_rule in PULSE_RULES, 'analysis.pulse_rule', f"必须是 {', '.join(PULSE_RULES)} 之一")
        _check(self.smoothing_um >= 0, 'analysis.smoothing_um', "不能为负")
        _check(0 < self.peak_threshold < 1, 'analysis.peak_threshold', "必须在 (0, 1) 内")
        _check(0 <= self.min_peak_mass < 1, 'analysis.min_peak_mass', "必须在 [0, 1) 内")
        _check(self.resolve_factor > 0, 'analysis.resolve_factor', "必须为正")


@dataclass
class OutputSection:
    csv_path: str = "density.csv"
    json_path: str = "summary.json"
    include_wall_time: bool = False

    def validate(self):
        _check(bool(self.csv_path), 'output.csv_path', "不能为空")
        _check(bool(self.json_path), 'output.json_path', "不能为空")


SECTIONS = {
    'laser': LaserSection,
    'wavepacket': WavepacketSection,
    'sequence': SequenceSection,
    'numerics': NumericsSection,
    'splitter': SplitterSection,
    'sweep': SweepSection,
    'analysis': AnalysisSection,
    'output': OutputSection,
}


def _check(condition: bool, name: str, message: str):
    if not condition:
        raise ConfigError(name, message)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _coerce(value, expected, name: str):
    """按字段声明类型转换取值，类型不符时报错"""
    if expected is float:
        if not _is_number(value):
            raise ConfigError(name, f"需要数值，得到 {value!r}")
        return float(value)
    if expected is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(name, f"需要整数，得到 {value!r}")
        return value
    if expected is bool:
        if not isinstance(value, bool):
            raise ConfigError(name, f"需要布尔值，得到 {value!r}")
        return value
    if expected is str:
        if not isinstance(value, str):
            raise ConfigError(name, f"需要字符串，得到 {value!r}")
        return value
    if expected is list:
        if not isinstance(value, list):
            raise ConfigError(name, f"需要列表，得到 {value!r}")
        return [float(v) if _is_number(v) else v for v in value]
    return value


def _build_section(name: str, data) -> object:
    cls = SECTIONS[name]
    if not isinstance(data, dict):
        raise ConfigError(name, "配置段必须是对象")
    declared = {f.name: f.type for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in declared:
            raise ConfigError(f"{name}.{key}", "未知配置项")
        kwargs[key] = _coerce(value, declared[key], f"{name}.{key}")
    section = cls(**kwargs)
    section.validate()
    return section


@dataclass
class RunConfig:
    laser: LaserSection = field(default_factory=LaserSection)
    wavepacket: WavepacketSection = field(default_factory=WavepacketSection)
    sequence: SequenceSection = field(default_factory=SequenceSection)
    numerics: NumericsSection = field(default_factory=NumericsSection)
    splitter: SplitterSection = field(default_factory=SplitterSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    output: OutputSection = field(default_factory=OutputSection)

    @classmethod
    def from_dict(cls, data: dict) -> 'RunConfig':
        """未给出的段与键取默认值；未知段或键报 ConfigError"""
        if not isinstance(data, dict):
            raise ConfigError('config', "顶层必须是对象")
        sections = {}
        for name, value in data.items():
            if name not in SECTIONS:
                raise ConfigError(name, "未知配置段")
            sections[name] = _build_section(name, value)
        config = cls(**sections)
        for name in SECTIONS:
            if name not in sections:
                getattr(config, name).validate()
        return config

    def to_dict(self) -> dict:
        return asdict(self)

    def laser_config(self) -> LaserConfig:
        s = self.laser
        return LaserConfig(
            wavelength=s.wavelength_nm * 1e-9,
            intensity_1=s.intensity_1_w_per_um2 * PER_UM2,
            intensity_2=s.intensity_2_w_per_um2 * PER_UM2,
            phase_1=s.phase_1_rad,
            phase_2=s.phase_2_rad,
            polarization=s.polarization,
        )

    def units(self) -> ScaledUnits:
        return ScaledUnits.from_laser(self.laser_config())

    def step_control(self) -> StepControl:
        return StepControl(
            norm_tolerance=self.numerics.norm_tolerance,
            truncation_tolerance=self.numerics.truncation_tolerance,
        )

    def gaussian_init(self) -> GaussianInit:
        return GaussianInit(
            width_w=self.wavepacket.width_w_m,
            mean_momentum=CONSTANTS.electron_mass * self.wavepacket.mean_velocity_mps,
            kbar_points=self.numerics.kbar_points,
            span_sigmas=self.numerics.span_sigmas,
        )

    def ramsey_borde(self) -> RamseyBordeConfig:
        s = self.sequence
        return RamseyBordeConfig(
            laser=self.laser_config(),
            T=s.T_ns * 1e-9,
            T_prime=s.T_prime_ns * 1e-9,
            T_doubleprime=s.T_doubleprime_ns * 1e-9,
            acceleration=s.acceleration_mps2,
            ladder_max=self.numerics.ladder_max,
            step_control=self.step_control(),
        )

    def window_m(self) -> Tuple[float, float]:
        lo, hi = self.numerics.window_um
        return lo * 1e-6, hi * 1e-6


def load_config(path) -> RunConfig:
    """
    读取 JSON 配置文件

    Args:
        path: 配置文件路径

    Returns:
        校验后的 RunConfig
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError('config', f"配置文件未找到: {config_path}")
    try:
        with open(config_path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError('config', f"JSON 解析失败: {e}") from e
    config = RunConfig.from_dict(data)
    logger.info(f"已加载配置: {config_path}")
    return config


def worker_count() -> int:
    """KDI_THREADS 限制线程数，未设置或为 0 时取 CPU 核数"""
    raw = os.environ.get('KDI_THREADS', '0').strip() or '0'
    try:
        requested = int(raw)
    except ValueError:
        raise ConfigError('KDI_THREADS', f"需要整数，得到 {raw!r}") from None
    if requested < 0:
        raise ConfigError('KDI_THREADS', "不能为负")
    return requested or (os.cpu_count() or 1)
