"""Ramsey-Bordé 四脉冲序列: 构造、执行与相移预测"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from ladder.base import (
    AcceleratedSegment, FreeSegment, GaussianInit, LadderWavefunction,
    PulseSpec, SpatialDensity, StepControl, TwoLevelModel
)
from ladder.errors import InputError, NormDrift
from ladder.propagation import accelerated_evolve, free_evolve
from ladder.pulse import evolve_pulse, two_level_evolution
from ladder.units import (
    LaserConfig, ScaledUnits, balanced_pulse_duration, recoil_velocity, weak_coupling_margin
)
from ladder.wavepacket import init_gaussian, reconstruct_spatial

logger = logging.getLogger(__name__)

SequenceStep = Union[PulseSpec, FreeSegment, AcceleratedSegment]

# 整个序列允许的累计范数漂移
SEQUENCE_NORM_TOLERANCE = 4e-8
# 横向速度超过此值时多普勒失谐不可忽略 (m/s)
DOPPLER_GUARD = 500.0


@dataclass(frozen=True)
class RamseyBordeConfig:
    """
    序列参数 (SI)

    T 为同一对脉冲之间的无场间隔，脉冲时长单独计入。
    """
    laser: LaserConfig
    T: float
    T_prime: float
    T_doubleprime: float
    acceleration: float
    ladder_max: int = 5
    step_control: StepControl = field(default_factory=StepControl)

    def __post_init__(self):
        for name in ('T', 'T_prime', 'T_doubleprime'):
            if getattr(self, name) < 0:
                raise InputError(f"{name} 不能为负: {getattr(self, name)}")

    @property
    def pulse_duration(self) -> float:
        return balanced_pulse_duration(self.laser.g1g2)

    def pulse(self, delta_omega: float) -> PulseSpec:
        laser = self.laser
        return PulseSpec(
            g1=laser.g1,
            g2=laser.g2,
            delta_omega=delta_omega,
            delta_theta=laser.delta_theta,
            duration=self.pulse_duration,
            ladder_max=self.ladder_max,
            step_control=self.step_control,
        )

    def splitter_pulse(self) -> PulseSpec:
        return self.pulse(-self.laser.recoil_frequency)

    def recombiner_pulse(self) -> PulseSpec:
        return self.pulse(self.laser.recoil_frequency)


@dataclass
class PulseSequence:
    steps: List[SequenceStep]

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def total_duration(self) -> float:
        return sum(step.duration for step in self.steps)

    @property
    def pulses(self) -> List[PulseSpec]:
        return [s for s in self.steps if isinstance(s, PulseSpec)]


def build_ramsey_borde(cfg: RamseyBordeConfig) -> PulseSequence:
    """
    构造序列: P(-ω_rec), Free(T), P(-ω_rec), Accel(T', a), P(+ω_rec), Free(T), P(+ω_rec), Free(T'')

    a = 0 时加速段退化为 Free(T')；T'' = 0 时省略末尾自由段。
    """
    laser = cfg.laser
    weak_coupling_margin(laser.coupling_intensity, laser.omega, laser.k_L)
    drift_velocity = abs(cfg.acceleration) * (cfg.T_prime + cfg.T + cfg.T_doubleprime)
    if drift_velocity > DOPPLER_GUARD:
        logger.warning(f"a·(T'+T+T'') = {drift_velocity:.1f} m/s > {DOPPLER_GUARD} m/s，多普勒失谐可能影响结果")

    split, recombine = cfg.splitter_pulse(), cfg.recombiner_pulse()
    if cfg.acceleration == 0:
        middle = FreeSegment(cfg.T_prime)
    else:
        middle = AcceleratedSegment(cfg.T_prime, cfg.acceleration)
    steps: List[SequenceStep] = [
        split, FreeSegment(cfg.T), split, middle,
        recombine, FreeSegment(cfg.T), recombine,
    ]
    if cfg.T_doubleprime > 0:
        steps.append(FreeSegment(cfg.T_doubleprime))
    return PulseSequence(steps)


def _step_name(step: SequenceStep) -> str:
    if isinstance(step, PulseSpec):
        return "脉冲"
    if isinstance(step, AcceleratedSegment):
        return "加速"
    return "自由"


def run_sequence(
    state: LadderWavefunction,
    seq: PulseSequence,
    progress_callback: Optional[Callable] = None
) -> LadderWavefunction:
    """
    按顺序执行序列

    Args:
        state: 初始实验室系状态
        seq: 序列
        progress_callback: 进度回调 (current, total, step)

    Returns:
        末态
    """
    norm_start = state.norm()
    total = len(seq)
    for index, step in enumerate(seq.steps, start=1):
        if isinstance(step, PulseSpec):
            state = evolve_pulse(state, step)
        elif isinstance(step, AcceleratedSegment):
            state = accelerated_evolve(state, step)
        else:
            state = free_evolve(state, step)
        logger.debug(f"序列步骤 {index}/{total}: {_step_name(step)} {step.duration:.3e} s")
        if progress_callback:
            progress_callback(index, total, step)

    drift = abs(state.norm() - norm_start)
    if drift > SEQUENCE_NORM_TOLERANCE:
        raise NormDrift(f"序列累计范数漂移 {drift:.2e} 超过 {SEQUENCE_NORM_TOLERANCE:.0e}", drift=drift)
    return state


def simulate(
    cfg: RamseyBordeConfig,
    init: GaussianInit,
    window: Tuple[float, float],
    num_points: int,
    max_workers: Optional[int] = None,
    progress_callback: Optional[Callable] = None
) -> Tuple[LadderWavefunction, SpatialDensity]:
    """从初始高斯波包运行完整序列并重建末态密度"""
    units = ScaledUnits.from_laser(cfg.laser)
    state = init_gaussian(init, units, cfg.ladder_max)
    final = run_sequence(state, build_ramsey_borde(cfg), progress_callback)
    density = reconstruct_spatial(final, window, num_points, max_workers=max_workers)
    return final, density


def phase_shift_prediction(cfg: RamseyBordeConfig) -> float:
    """Δφ = 2ω_rec·T' - 2a·k_L·T·T' (rad)"""
    laser = cfg.laser
    return 2.0 * laser.recoil_frequency * cfg.T_prime - 2.0 * cfg.acceleration * laser.k_L * cfg.T * cfg.T_prime


def fringe_period_acceleration(cfg: RamseyBordeConfig) -> float:
    """加速度扫描的条纹周期 π/(k_L·T·T') (m/s²)"""
    return math.pi / (cfg.laser.k_L * cfg.T * cfg.T_prime)


def splitter_separation(cfg: RamseyBordeConfig) -> float:
    """第二个脉冲后两臂间距 2ħk_L·T/m (m)"""
    return recoil_velocity(cfg.laser.k_L) * cfg.T


def recombiner_detuning(cfg: RamseyBordeConfig) -> float:
    """闭合两臂在复合脉冲处感受到的双光子失谐 2k_L·aT' (rad/s)"""
    return 2.0 * cfg.laser.k_L * cfg.acceleration * cfg.T_prime


def effective_gap(cfg: RamseyBordeConfig) -> float:
    """
    有限脉冲下两臂分离的等效时间 T_eff = T + 4τ/π (s)

    被踢分支在脉冲内取平均速度，留下分支的二能级群延迟再贡献 (4/π - 1)τ，
    两个分束脉冲合计 4τ/π。
    """
    return cfg.T + 4.0 * cfg.pulse_duration / math.pi


def fringe_period_finite_pulse(cfg: RamseyBordeConfig) -> float:
    """π/(k_L·T_eff·T') (m/s²)"""
    return math.pi / (cfg.laser.k_L * effective_gap(cfg) * cfg.T_prime)


@dataclass
class ClosedPortModel:
    """
    闭合两口的二能级有限脉冲模型，按初始动量分布加权平均

    pop_I = base_I + Re(interference_I)，interference_I = ⟨2·a*·b⟩
    """
    pop_I: float
    pop_V: float
    base_I: float
    interference_I: complex

    @property
    def phase(self) -> float:
        """等效相位差 arg⟨a*·b⟩，取值 [0, 2π)"""
        return float(np.angle(self.interference_I)) % (2.0 * math.pi)


def _pulse_elements(coupling: float, duration: float, kappa: np.ndarray) -> Tuple[np.ndarray, ...]:
    """失谐 2κ 下二能级传播子的 (下能级保持, 上能级保持, 跃迁) 矩阵元，略去公共相位"""
    lower, upper, kick = [], [], []
    for x in kappa:
        u = two_level_evolution(TwoLevelModel(coupling, 2.0 * x), duration) * np.exp(1j * x * duration)
        lower.append(u[0, 0])
        upper.append(u[1, 1])
        kick.append(u[1, 0])
    return np.array(lower), np.array(upper), np.array(kick)


def closed_port_model(cfg: RamseyBordeConfig, init: GaussianInit) -> ClosedPortModel:
    """
    闭合几何 I、V 两口的有限脉冲二能级预测

    分束对在 κ、复合对在 κ + aT' 处取矩阵元；两臂的自由演化与坐标系
    相位之比为 exp(2iT·aT')。

    Args:
        cfg: 序列参数
        init: 初始波包 (宽度与平均动量)

    Returns:
        ClosedPortModel
    """
    units = ScaledUnits.from_laser(cfg.laser)
    w = units.to_internal(init.width_w, 'length')
    sigma = 1.0 / (2.0 * w)
    center = units.to_internal(init.mean_momentum, 'momentum')
    kappa = center + np.linspace(-init.span_sigmas * sigma, init.span_sigmas * sigma, init.kbar_points)
    weights = np.exp(-2.0 * ((kappa - center) * w) ** 2)
    weights /= trapezoid(weights, kappa)

    coupling = units.to_internal(cfg.laser.g1g2, 'frequency')
    duration = units.to_internal(cfg.pulse_duration, 'time')
    gap = units.to_internal(cfg.T, 'time')
    drift = units.to_internal(cfg.acceleration, 'acceleration') * units.to_internal(cfg.T_prime, 'time')

    stay_1, _, kick_1 = _pulse_elements(coupling, duration, kappa)
    stay_lower, stay_upper, kick_2 = _pulse_elements(coupling, duration, kappa + drift)
    arm_phase = np.exp(2j * gap * drift)

    arm_a = stay_1 ** 2 * stay_upper ** 2
    arm_b = kick_1 ** 2 * kick_2 ** 2 * arm_phase
    port_v = stay_1 ** 2 * stay_upper * kick_2 + kick_1 ** 2 * kick_2 * stay_lower * arm_phase

    base = np.abs(arm_a) ** 2 + np.abs(arm_b) ** 2
    interference = 2.0 * np.conj(arm_a) * arm_b
    return ClosedPortModel(
        pop_I=float(trapezoid(weights * np.abs(arm_a + arm_b) ** 2, kappa)),
        pop_V=float(trapezoid(weights * np.abs(port_v) ** 2, kappa)),
        base_I=float(trapezoid(weights * base, kappa)),
        interference_I=complex(trapezoid(weights * interference, kappa)),
    )
