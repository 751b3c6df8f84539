"""脉冲之间的精确演化: 自由飞行与匀加速飞行

两者在动量空间都是对角相位；加速段另外把整体动量偏移 p_off 增加 maT'。
"""
import logging

import numpy as np

from ladder.base import AcceleratedSegment, Frame, FreeSegment, LadderWavefunction
from ladder.errors import FrameMismatch
from ladder.units import CONSTANTS

logger = logging.getLogger(__name__)


def _lab_momenta(state: LadderWavefunction) -> np.ndarray:
    return state.kbar[None, :] + 2.0 * state.orders[:, None] + state.momentum_offset


def free_evolve(state: LadderWavefunction, seg: FreeSegment) -> LadderWavefunction:
    """振幅乘以 exp(-iT·p²/2)，时间戳前进 T"""
    if state.frame is not Frame.LAB:
        raise FrameMismatch("自由演化需要实验室系状态")
    duration = state.units.to_internal(seg.duration, 'time')
    phase = np.exp(-0.5j * duration * _lab_momenta(state) ** 2)
    return state.evolve(state.amplitudes * phase, time_stamp=state.time_stamp + duration)


def accelerated_evolve(state: LadderWavefunction, seg: AcceleratedSegment) -> LadderWavefunction:
    """
    匀加速演化 exp(-iT'Ĥa/ħ)φ_p = exp(-iτ(p))·φ_{p+maT'}

    Args:
        state: 实验室系状态
        seg: 加速段 (时长 T'，加速度 a)

    Returns:
        动量偏移增加 maT' 后的状态
    """
    if state.frame is not Frame.LAB:
        raise FrameMismatch("加速演化需要实验室系状态")
    units = state.units
    duration = units.to_internal(seg.duration, 'time')
    accel = units.to_internal(seg.acceleration, 'acceleration')
    p = _lab_momenta(state)
    tau = 0.5 * p ** 2 * duration + 0.5 * p * accel * duration ** 2 + accel ** 2 * duration ** 3 / 6.0
    return state.evolve(
        state.amplitudes * np.exp(-1j * tau),
        momentum_offset=state.momentum_offset + accel * duration,
        time_stamp=state.time_stamp + duration,
    )


def tau_phase(p, seg: AcceleratedSegment):
    """
    τ(p) = [p²T'/(2m) + p·a·T'²/2 + m·a²·T'³/6]/ħ

    Args:
        p: 动量 (kg·m/s)，可为数组
        seg: 加速段

    Returns:
        相位 (rad)
    """
    c = CONSTANTS
    t, a = seg.duration, seg.acceleration
    return (p ** 2 * t / (2.0 * c.electron_mass) + p * a * t ** 2 / 2.0
            + c.electron_mass * a ** 2 * t ** 3 / 6.0) / c.hbar
