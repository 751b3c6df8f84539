"""波包构造、位置空间重建与峰值分析"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.ndimage import gaussian_filter1d, label
from scipy.signal import find_peaks
from scipy.special import erfc

from ladder.base import (
    Frame, GaussianInit, LadderWavefunction, Observables, Peak, SpatialDensity
)
from ladder.errors import (
    FrameMismatch, GridTooNarrow, NoPeaksFound, WidthNonPositive, WindowEmpty
)
from ladder.units import ScaledUnits

logger = logging.getLogger(__name__)

# 初始态截断尾部质量上限
TAIL_MASS_LIMIT = 1e-6
# 位置空间重建的分块大小
Z_CHUNK = 512


def init_gaussian(
    cfg: GaussianInit,
    units: ScaledUnits,
    ladder_max: int = 5
) -> LadderWavefunction:
    """
    构造初始高斯波包，全部布居在 n = 0

    ψ₀(k̄) = exp(-k̄²w²)·2^(1/4)·w^(1/2)·π^(-1/4)

    Args:
        cfg: 波包参数 (SI)
        units: 单位换算
        ladder_max: 阶梯截断 N

    Returns:
        实验室系下的 LadderWavefunction
    """
    if cfg.width_w <= 0:
        raise WidthNonPositive(f"波包宽度必须为正: {cfg.width_w}")
    if cfg.kbar_points < 3:
        raise GridTooNarrow(f"k̄ 网格点数过少: {cfg.kbar_points}")

    w = units.to_internal(cfg.width_w, 'length')
    sigma_k = 1.0 / (2.0 * w)
    if sigma_k >= cfg.max_kbar_width:
        raise GridTooNarrow(
            f"动量宽度 Δk̄ = {sigma_k:.4f} k_L 超过上限 {cfg.max_kbar_width} k_L"
        )

    half_span = cfg.span_sigmas * sigma_k
    if half_span >= 1.0:
        raise GridTooNarrow(f"k̄ 网格 ±{half_span:.3f} k_L 超出布里渊区")
    tail = erfc(cfg.span_sigmas / math.sqrt(2.0))
    if tail > TAIL_MASS_LIMIT:
        raise GridTooNarrow(
            f"k̄ 网格 ±{cfg.span_sigmas}σ 截断尾部质量 {tail:.2e} > {TAIL_MASS_LIMIT}"
        )

    kbar = np.linspace(-half_span, half_span, cfg.kbar_points)
    amplitudes = np.zeros((2 * ladder_max + 1, kbar.size), dtype=complex)
    amplitudes[ladder_max] = np.exp(-(kbar * w) ** 2) * 2 ** 0.25 * math.sqrt(w) * math.pi ** -0.25

    state = LadderWavefunction(
        ladder_max=ladder_max,
        kbar=kbar,
        amplitudes=amplitudes,
        units=units,
        momentum_offset=units.to_internal(cfg.mean_momentum, 'momentum'),
    )
    logger.debug(f"初始高斯波包: w={cfg.width_w:.3e} m, K={kbar.size}, N={ladder_max}, 范数={state.norm():.12f}")
    return state


def spatial_amplitude(
    state: LadderWavefunction,
    positions: np.ndarray,
    max_workers: Optional[int] = None
) -> np.ndarray:
    """
    直接求和计算位置空间波函数 (单位 m^-1/2)

    ψ(z) = Σₙ Σ_k̄ ψₙ(k̄)·exp(i(k̄+2n+p_off)z)·δk̄/√(2π)

    按 z 分块并行计算，各块写入互不重叠的切片，结果与线程数无关。
    """
    if state.frame is not Frame.LAB:
        raise FrameMismatch("位置空间重建需要实验室系状态")
    units = state.units
    positions = np.asarray(positions, dtype=float)
    z = units.to_internal(positions, 'length')
    coeffs = state.amplitudes * state.kbar_weights
    ladder_k = 2.0 * state.orders + state.momentum_offset
    psi = np.empty(z.size, dtype=complex)

    def process_chunk(start: int) -> int:
        zc = z[start:start + Z_CHUNK]
        partial = np.exp(1j * np.outer(zc, state.kbar)) @ coeffs.T
        psi[start:start + zc.size] = np.sum(partial * np.exp(1j * np.outer(zc, ladder_k)), axis=1)
        return start

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = [executor.submit(process_chunk, s) for s in range(0, z.size, Z_CHUNK)]
        for future in as_completed(futures):
            future.result()
    return psi / math.sqrt(2.0 * math.pi * units.length_unit)


def reconstruct_spatial(
    state: LadderWavefunction,
    window: Tuple[float, float],
    num_points: int,
    max_workers: Optional[int] = None
) -> SpatialDensity:
    """
    重建位置空间密度 |ψ(z)|²

    Args:
        state: 实验室系波函数
        window: 位置窗口 (m)
        num_points: 采样点数
        max_workers: 线程数上限

    Returns:
        SpatialDensity (SI)
    """
    if state.frame is not Frame.LAB:
        raise FrameMismatch("位置空间重建需要实验室系状态")
    z_min, z_max = window
    if num_points < 2 or not z_max > z_min:
        raise WindowEmpty(f"位置窗口为空: {window}, 点数 {num_points}")

    positions = np.linspace(z_min, z_max, num_points)
    psi = spatial_amplitude(state, positions, max_workers)
    return SpatialDensity(positions=positions, density=np.abs(psi) ** 2, window=(z_min, z_max))


def observables(state: LadderWavefunction) -> Observables:
    """范数、平均动量 (kg·m/s) 与各阶布居"""
    weights = np.abs(state.amplitudes) ** 2 * state.kbar_weights
    momenta = state.kbar[None, :] + 2.0 * state.orders[:, None] + state.momentum_offset
    mean_momentum = float(np.sum(weights * momenta))
    return Observables(
        norm=float(weights.sum()),
        mean_momentum=state.units.from_internal(mean_momentum, 'momentum'),
        ladder_populations=weights.sum(axis=1),
    )


def _segment_bounds(smoothed: np.ndarray, start: int, stop: int, prominence: float) -> List[Tuple[int, int]]:
    """在平滑密度的谷底处切分一个连续区域，相邻段共享切分点"""
    local = smoothed[start:stop]
    peaks, _ = find_peaks(local, prominence=prominence)
    cuts = [start]
    for left, right in zip(peaks[:-1], peaks[1:]):
        cuts.append(start + left + int(np.argmin(local[left:right + 1])))
    cuts.append(stop - 1)
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def peak_analysis(
    density: SpatialDensity,
    threshold: float = 1e-4,
    smoothing: float = 1e-6,
    prominence: float = 1e-3,
    min_mass: float = 5e-3
) -> List[Peak]:
    """
    分割密度中的峰

    在高斯平滑后的密度上取超过 threshold·max 的连续区域，并在谷底处切分
    相邻峰；质心、质量与 rms 宽度由原始密度计算。质量低于
    min_mass·总质量的段视为泄漏而丢弃。

    Args:
        density: 位置空间密度
        threshold: 区域阈值 (相对最大值)
        smoothing: 平滑宽度 (m)，用于抹平 λ/2 拍频条纹
        prominence: 峰显著度 (相对最大值)
        min_mass: 最小质量占比

    Returns:
        按中心位置排序的 Peak 列表
    """
    z = np.asarray(density.positions, dtype=float)
    d = np.asarray(density.density, dtype=float)
    if d.size < 2 or not np.any(d > 0):
        raise NoPeaksFound("密度为空")

    dz = z[1] - z[0]
    smoothed = gaussian_filter1d(d, smoothing / dz) if smoothing > 0 else d
    peak_max = float(smoothed.max())

    labeled, count = label(smoothed > threshold * peak_max)
    regions = []
    for index in range(1, count + 1):
        members = np.flatnonzero(labeled == index)
        regions.append((int(members[0]), int(members[-1]) + 1))

    total = float(trapezoid(d, z))
    peaks: List[Peak] = []
    for start, stop in regions:
        for a, b in _segment_bounds(smoothed, start, stop, prominence * peak_max):
            zs, ds = z[a:b + 1], d[a:b + 1]
            mass = float(trapezoid(ds, zs))
            if mass < min_mass * total:
                continue
            center = float(trapezoid(zs * ds, zs) / mass)
            width = math.sqrt(float(trapezoid((zs - center) ** 2 * ds, zs) / mass))
            peaks.append(Peak(center=center, mass=mass, width=width))

    if not peaks:
        raise NoPeaksFound("没有超过阈值的峰")
    peaks.sort(key=lambda p: p.center)
    logger.debug(f"峰值分析: {len(regions)} 个区域, {len(peaks)} 个峰")
    return peaks
