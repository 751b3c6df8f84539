"""部分束报告与条纹扫描"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from interferometer.components import beam_components, beam_populations
from interferometer.paths import PredictedBeam, enumerate_paths, find_beam, merge_beams
from interferometer.sequence import (
    RamseyBordeConfig, build_ramsey_borde, phase_shift_prediction, run_sequence
)
from ladder.base import GaussianInit, LadderWavefunction, Peak, SpatialDensity
from ladder.errors import BeamUnresolved, InputError
from ladder.units import CONSTANTS, ScaledUnits
from ladder.wavepacket import init_gaussian

logger = logging.getLogger(__name__)

SWEEP_PARAMS = {'a': 'acceleration', 'T_prime': 'T_prime'}


@dataclass
class BeamReport:
    label: str
    predicted_position: float
    measured_position: Optional[float]
    population: float
    width: Optional[float]
    resolved: bool = True

    def to_dict(self) -> dict:
        return {
            'label': self.label,
            'predicted_position_m': self.predicted_position,
            'measured_position_m': self.measured_position,
            'population': self.population,
            'width_m': self.width,
            'resolved': self.resolved,
        }


@dataclass
class FringeRow:
    param: float
    pop_I: float
    pop_V: float
    delta_phi: float
    model_I: float
    model_V: float

    def values(self) -> Tuple[float, ...]:
        return (self.param, self.pop_I, self.pop_V, self.delta_phi, self.model_I, self.model_V)


def _groups(beams: List[PredictedBeam], resolve_distance: float) -> List[List[PredictedBeam]]:
    """间距小于 resolve_distance 的相邻束归为一组"""
    groups: List[List[PredictedBeam]] = []
    for beam in sorted(beams, key=lambda b: b.position):
        if groups and beam.position - groups[-1][-1].position < resolve_distance:
            groups[-1].append(beam)
        else:
            groups.append([beam])
    return groups


def segment_populations(
    density: SpatialDensity,
    beams: List[PredictedBeam],
    resolve_distance: float
) -> List[Tuple[PredictedBeam, float, bool]]:
    """
    以相邻预测位置的中点为界积分密度

    无法分辨的组按各束权重分配组内质量。

    Returns:
        (束, 布居, 是否可分辨) 列表，按位置排序
    """
    z = density.positions
    cumulative = cumulative_trapezoid(density.density, z, initial=0.0)
    groups = _groups(beams, resolve_distance)
    bounds = [z[0]]
    for left, right in zip(groups[:-1], groups[1:]):
        bounds.append(0.5 * (left[-1].position + right[0].position))
    bounds.append(z[-1])
    masses = np.diff(np.interp(bounds, z, cumulative))

    result = []
    for group, mass in zip(groups, masses):
        total_weight = sum(b.weight for b in group)
        for beam in group:
            result.append((beam, float(mass) * beam.weight / total_weight, len(group) == 1))
    return result


def beam_report(
    density: SpatialDensity,
    peaks: List[Peak],
    beams: List[PredictedBeam],
    width_w: float,
    resolve_factor: float = 3.0,
    populations: Optional[Dict[str, float]] = None
) -> List[BeamReport]:
    """
    生成每个预测束的报告

    测得位置取距预测位置 w 以内最近的峰；不可分辨的束不匹配峰。
    给出 populations (按束分量分解的布居) 时取代密度分段积分。
    """
    reports = []
    for beam, population, resolved in segment_populations(density, beams, resolve_factor * width_w):
        match = None
        if resolved and peaks:
            nearest = min(peaks, key=lambda p: abs(p.center - beam.position))
            if abs(nearest.center - beam.position) <= width_w:
                match = nearest
        if populations is not None:
            population = populations[beam.label]
        reports.append(BeamReport(
            label=beam.label,
            predicted_position=beam.position,
            measured_position=match.center if match else None,
            population=population,
            width=match.width if match else None,
            resolved=resolved,
        ))
    return reports


def check_resolved(beams: List[PredictedBeam], width_w: float, resolve_factor: float,
                   param_value: Optional[float] = None):
    """I、V 与其他预测束的距离必须不小于 resolve_factor·w"""
    for label in ('I', 'V'):
        target = find_beam(beams, label)
        if target is None:
            raise BeamUnresolved(f"未找到束 {label}", param_value=param_value)
        for other in beams:
            if other is not target and abs(other.position - target.position) < resolve_factor * width_w:
                raise BeamUnresolved(
                    f"束 {label} 与束 {other.label} 相距不足 {resolve_factor}w，请增大 T''",
                    param_value=param_value
                )


def closed_beam_populations(
    state: LadderWavefunction,
    beams: List[PredictedBeam],
    components: Dict[str, LadderWavefunction],
    width_w: float,
    resolve_factor: float = 3.0,
    param_value: Optional[float] = None
) -> Tuple[float, float]:
    """
    闭合几何两个输出口 I、V 的布居

    按束分量分解末态，同阶相邻束的干涉交叉项不计入 I、V。
    """
    check_resolved(beams, width_w, resolve_factor, param_value)
    populations = beam_populations(state, beams, components)
    return populations['I'], populations['V']


def beam_fringe(
    base_cfg: RamseyBordeConfig,
    init: GaussianInit,
    param: str,
    values: Sequence[float],
    pulse_rule: str = 'coherent',
    resolve_factor: float = 3.0,
    max_workers: Optional[int] = None,
    progress_callback: Optional[Callable] = None
) -> List[FringeRow]:
    """
    对加速度 a 或 T' 扫描，逐点运行完整序列

    Args:
        base_cfg: 基准序列参数
        init: 初始波包
        param: 'a' (m/s²) 或 'T_prime' (s)
        values: 扫描值 (SI)
        pulse_rule: 预测束位置规则 (用于可分辨性检查)
        resolve_factor: 可分辨距离 (以 w 为单位)
        max_workers: 并行扫描点数上限
        progress_callback: 进度回调 (current, total, value)

    Returns:
        按扫描值顺序排列的 FringeRow 列表
    """
    if param not in SWEEP_PARAMS:
        raise InputError(f"未知扫描参数: {param}")
    mean_velocity = init.mean_momentum / CONSTANTS.electron_mass
    configs = [replace(base_cfg, **{SWEEP_PARAMS[param]: float(v)}) for v in values]
    predicted = []
    for value, cfg in zip(values, configs):
        beams = merge_beams(enumerate_paths(cfg, pulse_rule, mean_velocity), init.width_w)
        check_resolved(beams, init.width_w, resolve_factor, param_value=float(value))
        predicted.append(beams)

    rows: List[Optional[FringeRow]] = [None] * len(configs)
    total = len(configs)

    def run_point(index: int) -> int:
        cfg, value = configs[index], float(values[index])
        state = init_gaussian(init, ScaledUnits.from_laser(cfg.laser), cfg.ladder_max)
        final = run_sequence(state, build_ramsey_borde(cfg))
        components = beam_components(cfg, init, predicted[index])
        pop_i, pop_v = closed_beam_populations(
            final, predicted[index], components, init.width_w, resolve_factor, value
        )
        delta_phi = phase_shift_prediction(cfg)
        rows[index] = FringeRow(
            param=value,
            pop_I=pop_i,
            pop_V=pop_v,
            delta_phi=delta_phi,
            model_I=0.25 * math.cos(0.5 * delta_phi) ** 2,
            model_V=0.25 * math.sin(0.5 * delta_phi) ** 2,
        )
        return index

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = [executor.submit(run_point, i) for i in range(total)]
        for current, future in enumerate(as_completed(futures), start=1):
            index = future.result()
            logger.info(f"扫描进度 {current}/{total}: {param} = {float(values[index]):.6g}")
            if progress_callback:
                progress_callback(current, total, values[index])
    return rows
