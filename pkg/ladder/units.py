"""物理常数、单位换算与激光参数

内部计算采用无量纲单位 ħ = m = k_L = 1:
    长度单位 1/k_L, 动量单位 ħk_L, 时间单位 m/(ħk_L²)
此时反冲频率 ω_rec = 2。所有对外接口使用 SI 单位。
"""
import logging
import math
from dataclasses import dataclass, field

from ladder.errors import InputError

logger = logging.getLogger(__name__)

# 弱耦合裕度告警阈值
WEAK_COUPLING_WARN = 0.1
# 激光频率与反冲频率之比的下限
MIN_FREQUENCY_RATIO = 1e3


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA-2018 常数，保留 10 位有效数字"""
    hbar: float = 1.054571818e-34
    electron_mass: float = 9.109383702e-31
    elementary_charge: float = 1.602176634e-19
    light_speed: float = 299792458.0
    vacuum_permittivity: float = 8.854187813e-12


CONSTANTS = PhysicalConstants()


def recoil_frequency(k_L: float) -> float:
    """
    反冲频率 ω_rec = 2ħk_L²/m

    Args:
        k_L: 激光波数 (1/m)

    Returns:
        角频率 (rad/s)
    """
    c = CONSTANTS
    return 2.0 * c.hbar * k_L ** 2 / c.electron_mass


def recoil_velocity(k_L: float) -> float:
    """一次双光子散射 (2ħk_L) 的反冲速度 (m/s)"""
    return 2.0 * CONSTANTS.hbar * k_L / CONSTANTS.electron_mass


def coupling_from_intensity(intensity: float, omega: float) -> float:
    """
    由光强计算耦合常数 g = qE/(4ω√(mħ))，其中 I = 2cε₀E²

    Args:
        intensity: 光强 (W/m²)
        omega: 激光角频率 (rad/s)

    Returns:
        g (s^-1/2)，g² 的单位为 rad/s
    """
    c = CONSTANTS
    field_amplitude = math.sqrt(intensity / (2.0 * c.light_speed * c.vacuum_permittivity))
    return c.elementary_charge * field_amplitude / (4.0 * omega * math.sqrt(c.electron_mass * c.hbar))


def frequency_ratio(wavelength: float) -> float:
    """ω/ω_rec，波长单位 m"""
    k = 2.0 * math.pi / wavelength
    return CONSTANTS.light_speed * k / recoil_frequency(k)


def weak_coupling_margin(intensity: float, omega: float, k_L: float) -> float:
    """
    弱耦合裕度 q²I/(32ω²mħcε₀) / ω_rec

    结果 ≥ 0.1 时记录警告，但不中断计算。
    """
    c = CONSTANTS
    shift = c.elementary_charge ** 2 * intensity / (
        32.0 * omega ** 2 * c.electron_mass * c.hbar * c.light_speed * c.vacuum_permittivity
    )
    ratio = shift / recoil_frequency(k_L)
    if ratio >= WEAK_COUPLING_WARN:
        logger.warning(f"弱耦合条件不满足: 裕度比 {ratio:.3f} >= {WEAK_COUPLING_WARN}")
    return ratio


def critical_intensity(omega: float, k_L: float) -> float:
    """裕度比等于 1 时的光强 (W/m²)"""
    c = CONSTANTS
    return recoil_frequency(k_L) * 32.0 * omega ** 2 * c.electron_mass * c.hbar * c.light_speed \
        * c.vacuum_permittivity / c.elementary_charge ** 2


def balanced_pulse_duration(g1g2: float) -> float:
    """平衡分束 (π/2) 脉冲时长 π/(4g₁g₂)，单位 s"""
    if g1g2 <= 0:
        raise InputError(f"g1g2 必须为正: {g1g2}")
    return math.pi / (4.0 * g1g2)


@dataclass(frozen=True)
class LaserConfig:
    """
    双色激光参数

    两束激光共用平均波数 k_L = 2π/λ，频差只通过 Δω 进入脉冲。
    """
    wavelength: float
    intensity_1: float
    intensity_2: float
    phase_1: float = 0.0
    phase_2: float = 0.0
    polarization: str = "linear-xy"

    def __post_init__(self):
        if self.wavelength <= 0:
            raise InputError(f"波长必须为正: {self.wavelength}")
        if self.intensity_1 < 0 or self.intensity_2 < 0:
            raise InputError("光强不能为负")
        ratio = frequency_ratio(self.wavelength)
        if ratio <= MIN_FREQUENCY_RATIO:
            raise InputError(f"激光频率未远大于反冲频率: ω/ω_rec = {ratio:.3g}", frequency_ratio=ratio)

    @property
    def k_L(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * CONSTANTS.light_speed / self.wavelength

    @property
    def recoil_frequency(self) -> float:
        return recoil_frequency(self.k_L)

    @property
    def g1(self) -> float:
        return coupling_from_intensity(self.intensity_1, self.omega)

    @property
    def g2(self) -> float:
        return coupling_from_intensity(self.intensity_2, self.omega)

    @property
    def g1g2(self) -> float:
        return self.g1 * self.g2

    @property
    def coupling_intensity(self) -> float:
        """√(I₁I₂)，与 g₁g₂ 对应的等效光强 (W/m²)"""
        return math.sqrt(self.intensity_1 * self.intensity_2)

    @property
    def delta_theta(self) -> float:
        return self.phase_2 - self.phase_1


@dataclass(frozen=True)
class ScaledUnits:
    """
    SI 与内部无量纲单位之间的换算

    kind 取值: length, time, frequency, momentum, velocity,
    acceleration, wavenumber, coupling
    """
    k_L: float
    scales: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = CONSTANTS
        k = self.k_L
        frequency = c.hbar * k ** 2 / c.electron_mass
        scales = {
            'length': 1.0 / k,
            'time': 1.0 / frequency,
            'frequency': frequency,
            'momentum': c.hbar * k,
            'velocity': c.hbar * k / c.electron_mass,
            'acceleration': c.hbar ** 2 * k ** 3 / c.electron_mass ** 2,
            'wavenumber': k,
            'coupling': math.sqrt(frequency),
        }
        object.__setattr__(self, 'scales', scales)

    @classmethod
    def from_laser(cls, laser: LaserConfig) -> 'ScaledUnits':
        return cls(laser.k_L)

    @property
    def length_unit(self) -> float:
        return self.scales['length']

    @property
    def time_unit(self) -> float:
        return self.scales['time']

    @property
    def momentum_unit(self) -> float:
        return self.scales['momentum']

    @property
    def velocity_unit(self) -> float:
        return self.scales['velocity']

    @property
    def omega_rec(self) -> float:
        """内部单位下的反冲频率 (恒为 2)"""
        return 2.0

    def _scale(self, kind: str) -> float:
        try:
            return self.scales[kind]
        except KeyError:
            raise InputError(f"未知物理量类型: {kind}") from None

    def to_internal(self, value, kind: str):
        return value / self._scale(kind)

    def from_internal(self, value, kind: str):
        return value * self._scale(kind)
