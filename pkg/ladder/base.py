from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from ladder.errors import InputError
from ladder.units import ScaledUnits


class Frame(Enum):
    LAB = "lab"
    ROTATING = "rotating"


@dataclass(frozen=True)
class StepControl:
    """积分步长与容差控制"""
    max_step: Optional[float] = None       # s
    norm_tolerance: float = 1e-8
    truncation_tolerance: float = 1e-6


@dataclass(frozen=True)
class PulseSpec:
    """
    单个双色脉冲

    g1, g2 单位 s^-1/2; delta_omega = ω₂-ω₁ (rad/s);
    delta_theta = θ₂-θ₁ (rad); duration 单位 s
    """
    g1: float
    g2: float
    delta_omega: float
    delta_theta: float
    duration: float
    ladder_max: int = 5
    step_control: StepControl = field(default_factory=StepControl)

    def __post_init__(self):
        if self.duration < 0:
            raise InputError(f"脉冲时长不能为负: {self.duration}")
        if self.ladder_max < 1:
            raise InputError(f"ladder_max 至少为 1: {self.ladder_max}")

    @property
    def g1g2(self) -> float:
        return self.g1 * self.g2

    @property
    def light_shift(self) -> float:
        return self.g1 ** 2 + self.g2 ** 2


@dataclass(frozen=True)
class TwoLevelModel:
    """二能级近似: H = [[0, Ω], [Ω, δ]]"""
    coupling: float
    detuning: float

    def guard_ratio(self, omega_rec: float) -> float:
        return self.coupling / omega_rec


@dataclass(frozen=True)
class FreeSegment:
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise InputError(f"自由演化时长不能为负: {self.duration}")


@dataclass(frozen=True)
class AcceleratedSegment:
    duration: float
    acceleration: float

    def __post_init__(self):
        if self.duration < 0:
            raise InputError(f"加速段时长不能为负: {self.duration}")


@dataclass(frozen=True)
class GaussianInit:
    """
    初始高斯波包 (动量空间宽度 Δk̄ = 1/(2w))

    span_sigmas: k̄ 网格覆盖 ±span_sigmas·Δk̄
    max_kbar_width: Δk̄ 上限 (以 k_L 为单位)
    """
    width_w: float
    mean_momentum: float = 0.0
    kbar_points: int = 512
    span_sigmas: float = 6.0
    max_kbar_width: float = 0.25


@dataclass
class LadderWavefunction:
    """
    阶梯表象下的电子波函数 (内部单位)

    amplitudes[n + N, j] 对应动量 k̄_j + 2n + momentum_offset
    """
    ladder_max: int
    kbar: np.ndarray
    amplitudes: np.ndarray
    units: ScaledUnits
    momentum_offset: float = 0.0
    time_stamp: float = 0.0
    frame: Frame = Frame.LAB
    frame_pulse: Optional[PulseSpec] = None

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.ladder_max, self.ladder_max + 1)

    @property
    def kbar_weights(self) -> np.ndarray:
        """梯形积分权重"""
        if self.kbar.size < 2:
            return np.ones_like(self.kbar)
        dk = self.kbar[1] - self.kbar[0]
        w = np.full(self.kbar.shape, dk)
        w[0] = w[-1] = 0.5 * dk
        return w

    @property
    def kbar_si(self) -> np.ndarray:
        return self.units.from_internal(self.kbar, 'wavenumber')

    @property
    def momentum_offset_si(self) -> float:
        return self.units.from_internal(self.momentum_offset, 'momentum')

    @property
    def time_stamp_si(self) -> float:
        return self.units.from_internal(self.time_stamp, 'time')

    def populations(self) -> np.ndarray:
        return (np.abs(self.amplitudes) ** 2) @ self.kbar_weights

    def norm(self) -> float:
        return float(self.populations().sum())

    def edge_population(self) -> float:
        pops = self.populations()
        return float(pops[0] + pops[-1])

    def population_of(self, order: int) -> float:
        if abs(order) > self.ladder_max:
            return 0.0
        return float(self.populations()[order + self.ladder_max])

    def evolve(self, amplitudes: np.ndarray, **changes) -> 'LadderWavefunction':
        """返回替换振幅 (及其他字段) 后的新状态"""
        return replace(self, amplitudes=amplitudes, **changes)


@dataclass
class SpatialDensity:
    positions: np.ndarray    # m
    density: np.ndarray      # 1/m
    window: Tuple[float, float]

    def total(self) -> float:
        return float(trapezoid(self.density, self.positions))

    def centroid(self) -> float:
        return float(trapezoid(self.positions * self.density, self.positions)) / self.total()

    def to_csv(self, path) -> None:
        with open(Path(path), 'w', encoding='utf-8', newline='\n') as f:
            f.write("z_m,density_per_m\n")
            for z, d in zip(self.positions, self.density):
                f.write(f"{z:.17g},{d:.17g}\n")


@dataclass
class Observables:
    norm: float
    mean_momentum: float            # kg·m/s
    ladder_populations: np.ndarray


@dataclass
class Peak:
    center: float    # m
    mass: float
    width: float     # m
