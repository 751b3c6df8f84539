"""经典路径枚举与部分束标注

每个脉冲按共振选择规则把一条路径分成“留下”与“被踢”两支，
振幅取理想分束矩阵元 (±1/√2)。位置按经典运动积分，脉冲期间的
速度由 pulse_rule 决定:
    instantaneous - 脉冲不占时间
    average       - 被踢分支取脉冲前后速度的平均，留下分支取自身速度
    group_delay   - 由二能级传播子相位对准动量的导数给出位移
    coherent      - 路径位置同 group_delay；束位置再由各路径分量的相干叠加
                    重新确定 (见 interferometer.components)
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from interferometer.sequence import RamseyBordeConfig, build_ramsey_borde
from ladder.base import AcceleratedSegment, PulseSpec, TwoLevelModel
from ladder.errors import InputError
from ladder.pulse import resonant_pair, two_level_evolution
from ladder.units import ScaledUnits

logger = logging.getLogger(__name__)

PULSE_RULES = ('instantaneous', 'average', 'group_delay', 'coherent')

# 每个脉冲的动量转移 (以 2ħk_L 为单位) -> 束编号
BEAM_LABELS = {
    (0, 0, 0, 0): 'I',
    (1, -1, -1, 1): 'I',
    (0, 0, -1, 1): 'II',
    (1, -1, 0, 0): 'III',
    (0, 0, -1, 0): 'IV',
    (0, 0, 0, -1): 'V',
    (1, -1, -1, 0): 'V',
    (1, -1, 0, -1): 'VI',
    (0, 1, 0, 0): 'VII',
    (1, 0, 0, 0): 'VIII',
}

# 位置合并容差 (以波包宽度 w 为单位)
MERGE_TOLERANCE = 1e-2
# 群延迟数值微分步长 (内部单位失谐)
GROUP_DELAY_STEP = 1e-5


@dataclass
class ClassicalPath:
    kick_pattern: Tuple[int, ...]
    final_position: float           # m
    final_momentum: float           # kg·m/s
    final_order: int
    amplitude_weight: complex
    beam_label: str
    instantaneous_position: float   # m

    def to_dict(self) -> dict:
        return {
            'kick_pattern': list(self.kick_pattern),
            'beam_label': self.beam_label,
            'final_order': self.final_order,
            'final_position_m': self.final_position,
            'instantaneous_position_m': self.instantaneous_position,
            'final_momentum_kg_mps': self.final_momentum,
            'amplitude_weight': [self.amplitude_weight.real, self.amplitude_weight.imag],
        }


@dataclass
class PredictedBeam:
    label: str
    position: float                 # m
    momentum: float                 # kg·m/s
    order: int
    weight: float                   # Σ|振幅|²
    paths: List[ClassicalPath] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'label': self.label,
            'position_m': self.position,
            'momentum_kg_mps': self.momentum,
            'final_order': self.order,
            'weight': self.weight,
            'path_count': len(self.paths),
        }


@dataclass
class _Branch:
    order: int
    position: float
    instantaneous: float
    kappa: float
    amplitude: complex = 1.0 + 0j
    kicks: Tuple[int, ...] = ()

    @property
    def velocity(self) -> float:
        return self.kappa + 2.0 * self.order


def _kick_sign(kick: int, delta_omega: float) -> float:
    """理想分束矩阵元的符号: 离开耦合对“本位”阶的一支取 -1"""
    if (kick == -1 and delta_omega < 0) or (kick == 1 and delta_omega > 0):
        return -1.0
    return 1.0


def _group_delay_shift(branch: _Branch, kick: int, direction: int, detuning: float,
                       coupling: float, duration: float) -> float:
    """二能级传播子相位给出的脉冲期间位移 (内部单位)"""
    lower = branch.order if direction == 1 else branch.order - 1
    column = 0 if direction == 1 else 1
    row = column if kick == 0 else 1 - column
    plus = two_level_evolution(TwoLevelModel(coupling, detuning + GROUP_DELAY_STEP), duration)[row, column]
    minus = two_level_evolution(TwoLevelModel(coupling, detuning - GROUP_DELAY_STEP), duration)[row, column]
    phase_slope = np.angle(plus * np.conj(minus)) / (2.0 * GROUP_DELAY_STEP)
    return (branch.kappa + 2.0 * lower) * duration - 2.0 * phase_slope


def _apply_pulse(branches: List[_Branch], pulse: PulseSpec, units: ScaledUnits, rule: str) -> List[_Branch]:
    delta_omega = units.to_internal(pulse.delta_omega, 'frequency')
    coupling = units.to_internal(pulse.g1g2, 'frequency')
    duration = units.to_internal(pulse.duration, 'time')
    result = []
    for branch in branches:
        direction, detuning = resonant_pair(branch.order, branch.kappa, delta_omega)
        kicks = (0, direction) if direction else (0,)
        for kick in kicks:
            child = _Branch(
                order=branch.order + kick,
                position=branch.position,
                instantaneous=branch.instantaneous,
                kappa=branch.kappa,
                amplitude=branch.amplitude,
                kicks=branch.kicks + (kick,),
            )
            if direction:
                child.amplitude *= _kick_sign(kick, delta_omega) / math.sqrt(2.0)
            if rule == 'average':
                child.position += 0.5 * (branch.velocity + child.velocity) * duration
            elif rule in ('group_delay', 'coherent'):
                if direction:
                    child.position += _group_delay_shift(branch, kick, direction, detuning, coupling, duration)
                else:
                    child.position += branch.velocity * duration
            result.append(child)
    return result


def enumerate_paths(
    cfg: RamseyBordeConfig,
    pulse_rule: str = 'average',
    mean_velocity: float = 0.0
) -> List[ClassicalPath]:
    """
    枚举所有经典路径

    Args:
        cfg: 序列参数
        pulse_rule: 脉冲期间的位置规则
        mean_velocity: 初始平均速度 (m/s)

    Returns:
        ClassicalPath 列表 (按最终位置排序)
    """
    if pulse_rule not in PULSE_RULES:
        raise InputError(f"未知脉冲位置规则: {pulse_rule}")
    units = ScaledUnits.from_laser(cfg.laser)
    branches = [_Branch(order=0, position=0.0, instantaneous=0.0,
                        kappa=units.to_internal(mean_velocity, 'velocity'))]

    for step in build_ramsey_borde(cfg).steps:
        if isinstance(step, PulseSpec):
            branches = _apply_pulse(branches, step, units, pulse_rule)
            continue
        duration = units.to_internal(step.duration, 'time')
        accel = units.to_internal(step.acceleration, 'acceleration') if isinstance(step, AcceleratedSegment) else 0.0
        for branch in branches:
            shift = branch.velocity * duration + 0.5 * accel * duration ** 2
            branch.position += shift
            branch.instantaneous += shift
            branch.kappa += accel * duration

    paths = [
        ClassicalPath(
            kick_pattern=b.kicks,
            final_position=units.from_internal(b.position, 'length'),
            final_momentum=units.from_internal(b.velocity, 'momentum'),
            final_order=b.order,
            amplitude_weight=complex(b.amplitude),
            beam_label=BEAM_LABELS.get(b.kicks, '?'),
            instantaneous_position=units.from_internal(b.instantaneous, 'length'),
        )
        for b in branches
    ]
    paths.sort(key=lambda p: p.final_position)
    logger.debug(f"经典路径枚举 ({pulse_rule}): {len(paths)} 条")
    return paths


def merge_beams(paths: List[ClassicalPath], width_w: float) -> List[PredictedBeam]:
    """
    按 (最终阶, 瞬时极限位置) 合并路径为部分束

    束位置取各路径位置按 |振幅|² 的加权平均。

    Returns:
        按位置排序的 PredictedBeam 列表
    """
    tolerance = MERGE_TOLERANCE * width_w
    ordered = sorted(paths, key=lambda p: (p.final_order, p.instantaneous_position))
    groups: List[List[ClassicalPath]] = []
    for path in ordered:
        last = groups[-1][-1] if groups else None
        if last is not None and last.final_order == path.final_order \
                and abs(last.instantaneous_position - path.instantaneous_position) < tolerance:
            groups[-1].append(path)
        else:
            groups.append([path])

    beams = []
    for group in groups:
        weights = np.array([abs(p.amplitude_weight) ** 2 for p in group])
        labels = sorted({p.beam_label for p in group})
        beams.append(PredictedBeam(
            label='/'.join(labels),
            position=float(np.average([p.final_position for p in group], weights=weights)),
            momentum=group[0].final_momentum,
            order=group[0].final_order,
            weight=float(weights.sum()),
            paths=group,
        ))
    beams.sort(key=lambda b: b.position)
    return beams


def find_beam(beams: List[PredictedBeam], label: str) -> Optional[PredictedBeam]:
    for beam in beams:
        if beam.label == label:
            return beam
    return None
