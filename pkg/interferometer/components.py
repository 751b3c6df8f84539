"""按路径分解末态: 每条经典路径对应的波函数分量

每个脉冲之后把状态投影到路径所在的阶，同一束的各路径分量相干叠加。
分量之和与完整演化只差非共振泄漏。
"""
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from interferometer.paths import PredictedBeam
from interferometer.sequence import RamseyBordeConfig, build_ramsey_borde
from ladder.base import AcceleratedSegment, GaussianInit, LadderWavefunction, Peak, PulseSpec
from ladder.errors import InputError, NoPeaksFound
from ladder.propagation import accelerated_evolve, free_evolve
from ladder.pulse import evolve_pulse
from ladder.units import ScaledUnits
from ladder.wavepacket import init_gaussian, peak_analysis, reconstruct_spatial

logger = logging.getLogger(__name__)

KickPattern = Tuple[int, ...]


def _project(state: LadderWavefunction, order: int) -> LadderWavefunction:
    """只保留第 order 阶"""
    amplitudes = np.zeros_like(state.amplitudes)
    row = order + state.ladder_max
    if 0 <= row < amplitudes.shape[0]:
        amplitudes[row] = state.amplitudes[row]
    return state.evolve(amplitudes)


def path_components(
    cfg: RamseyBordeConfig,
    init: GaussianInit,
    patterns: Iterable[Sequence[int]]
) -> Dict[KickPattern, LadderWavefunction]:
    """
    沿路径树演化，返回每个踢动模式的末态分量

    Args:
        cfg: 序列参数
        init: 初始波包
        patterns: 每个脉冲的动量转移 (以 2ħk_L 为单位)

    Returns:
        {踢动模式: 分量波函数}
    """
    patterns = [tuple(p) for p in patterns]
    seq = build_ramsey_borde(cfg)
    if any(len(p) != len(seq.pulses) for p in patterns):
        raise InputError(f"踢动模式长度必须等于脉冲数 {len(seq.pulses)}")
    prefixes = {p[:i] for p in patterns for i in range(len(p) + 1)}

    units = ScaledUnits.from_laser(cfg.laser)
    branches: Dict[KickPattern, LadderWavefunction] = {(): init_gaussian(init, units, cfg.ladder_max)}
    for step in seq.steps:
        if isinstance(step, PulseSpec):
            evolved = {}
            for prefix, state in branches.items():
                after = evolve_pulse(state, step)
                for kick in (-1, 0, 1):
                    child = prefix + (kick,)
                    if child in prefixes:
                        evolved[child] = _project(after, sum(child))
            branches = evolved
        elif isinstance(step, AcceleratedSegment):
            branches = {k: accelerated_evolve(s, step) for k, s in branches.items()}
        else:
            branches = {k: free_evolve(s, step) for k, s in branches.items()}
    logger.debug(f"路径分量: {len(patterns)} 条路径, 末态分支 {len(branches)} 个")
    return {p: branches[p] for p in patterns}


def _add(states: List[LadderWavefunction]) -> LadderWavefunction:
    total = states[0].amplitudes.copy()
    for state in states[1:]:
        total = total + state.amplitudes
    return states[0].evolve(total)


def beam_components(
    cfg: RamseyBordeConfig,
    init: GaussianInit,
    beams: List[PredictedBeam]
) -> Dict[str, LadderWavefunction]:
    """每个预测束的相干分量 (组内各路径分量之和)"""
    patterns = [p.kick_pattern for beam in beams for p in beam.paths]
    components = path_components(cfg, init, patterns)
    return {beam.label: _add([components[p.kick_pattern] for p in beam.paths]) for beam in beams}


def beam_populations(
    state: LadderWavefunction,
    beams: List[PredictedBeam],
    components: Dict[str, LadderWavefunction]
) -> Dict[str, float]:
    """
    把末态按束分量做最小二乘分解，得到各束布居

    同一末阶的束在 k̄ 空间以 √δk̄ 加权联立求解 ψₙ ≈ Σ c_b·φ_b，
    布居取 |c_b|²·‖φ_b‖²，不含束之间的交叉项。
    """
    sqrt_weights = np.sqrt(state.kbar_weights)
    populations = {}
    for order in sorted({beam.order for beam in beams}):
        labels = sorted(beam.label for beam in beams if beam.order == order)
        row = order + state.ladder_max
        design = np.column_stack([components[label].amplitudes[row] * sqrt_weights for label in labels])
        target = state.amplitudes[row] * sqrt_weights
        coeffs, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
        for label, coeff, column in zip(labels, coeffs, design.T):
            populations[label] = float(abs(coeff) ** 2 * np.vdot(column, column).real)
    return populations


def coherent_beams(
    beams: List[PredictedBeam],
    components: Dict[str, LadderWavefunction],
    window: Tuple[float, float],
    num_points: int,
    width_w: float,
    peak_options: Optional[dict] = None,
    max_workers: Optional[int] = None
) -> List[PredictedBeam]:
    """
    由各束分量的相干叠加预测束位置

    重建叠加态密度并做与测量相同的峰分割；每个束取 w 以内最近的峰，
    找不到时取自身分量的质心。

    Returns:
        更新位置后的 PredictedBeam 列表 (按位置排序)
    """
    model = _add([components[beam.label] for beam in beams])
    density = reconstruct_spatial(model, window, num_points, max_workers=max_workers)
    try:
        peaks: List[Peak] = peak_analysis(density, **(peak_options or {}))
    except NoPeaksFound:
        peaks = []

    result = []
    for beam in beams:
        nearest = min(peaks, key=lambda p: abs(p.center - beam.position)) if peaks else None
        if nearest is not None and abs(nearest.center - beam.position) <= width_w:
            position = nearest.center
        else:
            own = reconstruct_spatial(components[beam.label], window, num_points, max_workers=max_workers)
            position = own.centroid()
        result.append(PredictedBeam(
            label=beam.label,
            position=position,
            momentum=beam.momentum,
            order=beam.order,
            weight=beam.weight,
            paths=beam.paths,
        ))
    result.sort(key=lambda b: b.position)
    logger.debug(f"相干束位置: {len(result)} 个束, 模型峰 {len(peaks)} 个")
    return result
