"""双色脉冲求解器

数值部分: 旋转坐标系下的阶梯方程
    i∂ₜψ̄ₙ = n(2n + 2κ + Δω)ψ̄ₙ + g₁g₂(ψ̄ₙ₋₁ + ψ̄ₙ₊₁)    (内部单位)
用定步长 RK4 积分，各 k̄ 列互不耦合。
解析部分: 二能级 Rabi 传播子与理想分束矩阵，用于对照。
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np

from ladder.base import Frame, LadderWavefunction, PulseSpec, TwoLevelModel
from ladder.errors import (
    FrameMismatch, InputError, NoConvergence, NormDrift, PopulationOutsideModel, TruncationOverflow
)
from ladder.units import ScaledUnits

logger = logging.getLogger(__name__)

# 步长上限: h·(max|对角| + 2g₁g₂) ≤ 0.02，且每个脉冲至少 200 步
STEP_SAFETY = 0.02
MIN_STEPS = 200
# 理想分束器允许的耦合对之外布居
OUTSIDE_MODEL_LIMIT = 1e-3
# truncation_convergence 的判据与上限
CONVERGENCE_TOLERANCE = 1e-8
MAX_LADDER = 64
# 共振窗口: 对失谐 |δ| < ω_rec/2 (内部单位为 1)
RESONANCE_WINDOW = 1.0


def pair_detuning(order: int, kappa, delta_omega: float):
    """阶 (order, order+1) 之间的双光子失谐 (内部单位)"""
    return 2.0 * (2 * order + 1) + 2.0 * kappa + delta_omega


def resonant_pair(order: int, kappa: float, delta_omega: float,
                  window: float = RESONANCE_WINDOW) -> Tuple[int, float]:
    """
    判断脉冲将 order 阶耦合到哪个相邻阶

    Returns:
        (方向, 失谐)，方向 +1 表示耦合到 order+1，-1 表示 order-1，
        0 表示不共振 (此时失谐为 nan)
    """
    up = pair_detuning(order, kappa, delta_omega)
    down = pair_detuning(order - 1, kappa, delta_omega)
    candidates = [(abs(up), 1, up), (abs(down), -1, down)]
    candidates = [c for c in candidates if c[0] < window]
    if not candidates:
        return 0, float('nan')
    _, direction, detuning = min(candidates)
    return direction, detuning


def _internal(pulse: PulseSpec, units: ScaledUnits) -> dict:
    return {
        'coupling': units.to_internal(pulse.g1g2, 'frequency'),
        'light_shift': units.to_internal(pulse.light_shift, 'frequency'),
        'delta_omega': units.to_internal(pulse.delta_omega, 'frequency'),
        'duration': units.to_internal(pulse.duration, 'time'),
        'max_step': (units.to_internal(pulse.step_control.max_step, 'time')
                     if pulse.step_control.max_step else math.inf),
    }


def rotating_hamiltonian(
    pulse: PulseSpec,
    kappa: np.ndarray,
    units: ScaledUnits,
    ladder_max: Optional[int] = None
) -> np.ndarray:
    """
    旋转坐标系下截断的阶梯哈密顿量 (内部单位)

    Args:
        pulse: 脉冲参数
        kappa: 每列的准动量 k̄ + p_off (内部单位)
        units: 单位换算
        ladder_max: 截断 N，默认取 pulse.ladder_max

    Returns:
        形状 (K, 2N+1, 2N+1) 的实对称矩阵组
    """
    n_max = pulse.ladder_max if ladder_max is None else ladder_max
    params = _internal(pulse, units)
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    orders = np.arange(-n_max, n_max + 1)
    dim = orders.size

    ham = np.zeros((kappa.size, dim, dim))
    idx = np.arange(dim)
    ham[:, idx, idx] = orders[None, :] * (2.0 * orders[None, :] + 2.0 * kappa[:, None] + params['delta_omega'])
    ham[:, idx[:-1], idx[1:]] = params['coupling']
    ham[:, idx[1:], idx[:-1]] = params['coupling']
    return ham


def _rk4_propagator(ham: np.ndarray, duration: float, max_step: float = math.inf) -> Tuple[np.ndarray, int]:
    """
    定步长 RK4 的总传播矩阵

    常系数线性方程的每一步都是同一个矩阵
    R = I + A + A²/2 + A³/6 + A⁴/24 (A = -ihH)，M 步即 R^M。
    """
    dim = ham.shape[-1]
    eye = np.broadcast_to(np.eye(dim, dtype=complex), ham.shape)
    if duration == 0:
        return eye.copy(), 0

    row_norm = float(np.max(np.abs(ham).sum(axis=-1)))
    h_max = min(duration / MIN_STEPS, max_step)
    if row_norm > 0:
        h_max = min(h_max, STEP_SAFETY / row_norm)
    steps = int(math.ceil(duration / h_max))
    h = duration / steps

    a = -1j * h * ham
    step = eye + a @ (eye + a / 2 @ (eye + a / 3 @ (eye + a / 4)))
    return np.linalg.matrix_power(step, steps), steps


def _frame_phase(state: LadderWavefunction, pulse: PulseSpec) -> np.ndarray:
    """Φₙ(k̄,t) = exp(-it(g₁²+g₂² + κ²/2) + in(Δω·t - Δθ))，t 取当前时间戳"""
    params = _internal(pulse, state.units)
    t = state.time_stamp
    kappa = state.kbar + state.momentum_offset
    orders = state.orders[:, None]
    exponent = -t * (params['light_shift'] + 0.5 * kappa[None, :] ** 2) \
        + orders * (params['delta_omega'] * t - pulse.delta_theta)
    return np.exp(1j * exponent)


def rotating_frame_map(state: LadderWavefunction, pulse: PulseSpec, direction: str) -> LadderWavefunction:
    """
    实验室系与旋转坐标系之间的对角相位变换

    Args:
        state: 当前状态
        pulse: 定义旋转坐标系的脉冲
        direction: 'to_rotating' 或 'to_lab'
    """
    if direction == 'to_rotating':
        if state.frame is not Frame.LAB:
            raise FrameMismatch("状态已处于旋转坐标系")
        phase = np.conj(_frame_phase(state, pulse))
        return state.evolve(state.amplitudes * phase, frame=Frame.ROTATING, frame_pulse=pulse)
    if direction == 'to_lab':
        if state.frame is not Frame.ROTATING:
            raise FrameMismatch("状态不在旋转坐标系")
        if state.frame_pulse != pulse:
            raise FrameMismatch("旋转坐标系与脉冲参数不一致")
        phase = _frame_phase(state, pulse)
        return state.evolve(state.amplitudes * phase, frame=Frame.LAB, frame_pulse=None)
    raise InputError(f"未知变换方向: {direction}")


def resize_ladder(state: LadderWavefunction, ladder_max: int, tolerance: float) -> LadderWavefunction:
    """调整阶梯截断；被丢弃的阶布居超过 tolerance 时报错"""
    current = state.ladder_max
    if ladder_max == current:
        return state
    if ladder_max > current:
        pad = ladder_max - current
        amplitudes = np.pad(state.amplitudes, ((pad, pad), (0, 0)))
    else:
        cut = current - ladder_max
        dropped = state.populations()
        dropped = float(dropped[:cut].sum() + dropped[-cut:].sum())
        if dropped > tolerance:
            raise TruncationOverflow(
                f"缩减到 N={ladder_max} 会丢弃布居 {dropped:.2e}",
                edge_population=dropped, ladder_max=ladder_max
            )
        amplitudes = state.amplitudes[cut:-cut]
    return state.evolve(amplitudes.copy(), ladder_max=ladder_max)


def _check_edges(state: LadderWavefunction, tolerance: float, where: str):
    edge = state.edge_population()
    if edge > tolerance:
        raise TruncationOverflow(
            f"{where}边缘布居 {edge:.2e} 超过容差 {tolerance:.0e}，请增大 ladder_max (当前 {state.ladder_max})",
            edge_population=edge, ladder_max=state.ladder_max
        )


def evolve_pulse(state: LadderWavefunction, pulse: PulseSpec) -> LadderWavefunction:
    """
    数值演化一个脉冲

    进入旋转坐标系 -> 每列 RK4 积分 -> 回到实验室系，时间戳前进 duration。

    Args:
        state: 实验室系状态
        pulse: 脉冲参数

    Returns:
        脉冲后的实验室系状态
    """
    if state.frame is not Frame.LAB:
        raise FrameMismatch("脉冲演化需要实验室系状态")
    control = pulse.step_control
    units = state.units
    if pulse.ladder_max < 2:
        logger.warning(f"ladder_max={pulse.ladder_max} 过小，截断误差可能很大")
    omega_ratio = pulse.delta_omega / units.from_internal(units.omega_rec, 'frequency')
    if abs(omega_ratio - round(omega_ratio)) > 0.1:
        logger.debug(f"Δω = {omega_ratio:.3f} ω_rec 不在整数倍共振附近")

    state = resize_ladder(state, pulse.ladder_max, control.truncation_tolerance)
    _check_edges(state, control.truncation_tolerance, "脉冲入口")
    if pulse.duration == 0:
        return state.evolve(state.amplitudes.copy())

    norm_before = state.norm()
    params = _internal(pulse, units)
    ham = rotating_hamiltonian(pulse, state.kbar + state.momentum_offset, units, state.ladder_max)
    propagator, steps = _rk4_propagator(ham, params['duration'], params['max_step'])

    rotating = rotating_frame_map(state, pulse, 'to_rotating')
    evolved = np.einsum('kij,jk->ik', propagator, rotating.amplitudes)
    rotating = rotating.evolve(evolved, time_stamp=state.time_stamp + params['duration'])
    result = rotating_frame_map(rotating, pulse, 'to_lab')

    drift = abs(result.norm() - norm_before)
    logger.debug(f"脉冲演化: {steps} 步 RK4, 范数漂移 {drift:.2e}")
    if drift > control.norm_tolerance:
        raise NormDrift(f"脉冲范数漂移 {drift:.2e} 超过容差 {control.norm_tolerance:.0e}", drift=drift)
    _check_edges(result, control.truncation_tolerance, "脉冲出口")
    return result


def transfer_probability(
    pulse: PulseSpec,
    kbar_values,
    units: ScaledUnits,
    initial_order: int = 0,
    target_order: int = 1,
    momentum_offset: float = 0.0
) -> np.ndarray:
    """
    单个脉冲对给定 k̄ 列的转移概率 |U[target, initial]|²

    Args:
        kbar_values: 准波数 (1/m)
        momentum_offset: 动量偏移 (kg·m/s)
    """
    kappa = units.to_internal(np.atleast_1d(np.asarray(kbar_values, dtype=float)), 'wavenumber') \
        + units.to_internal(momentum_offset, 'momentum')
    params = _internal(pulse, units)
    ham = rotating_hamiltonian(pulse, kappa, units)
    propagator, _ = _rk4_propagator(ham, params['duration'], params['max_step'])
    n = pulse.ladder_max
    return np.abs(propagator[:, target_order + n, initial_order + n]) ** 2


def two_level_evolution(model: TwoLevelModel, t: float) -> np.ndarray:
    """
    二能级 Rabi 传播子 exp(-iHt)，H = [[0, Ω], [Ω, δ]]

    转移概率 P₁ = Ω²/(Ω²+(δ/2)²)·sin²(t·√(Ω²+(δ/2)²))
    """
    if t < 0:
        raise InputError(f"时间不能为负: {t}")
    omega, delta = model.coupling, model.detuning
    rabi = math.sqrt(omega ** 2 + 0.25 * delta ** 2)
    c = math.cos(rabi * t)
    s = t * np.sinc(rabi * t / math.pi)
    global_phase = np.exp(-0.5j * delta * t)
    return global_phase * np.array([
        [c + 0.5j * delta * s, -1j * omega * s],
        [-1j * omega * s, c - 0.5j * delta * s],
    ])


def ideal_splitter(state: LadderWavefunction, sign: str) -> LadderWavefunction:
    """
    瞬时理想分束器

    minus 耦合 (0, +1): ψ₀ → (ψ₀ - ψ₁)/√2, ψ₁ → (ψ₀ + ψ₁)/√2
    plus  耦合 (0, -1): ψ₀ → (ψ₀ - ψ₋₁)/√2, ψ₋₁ → (ψ₀ + ψ₋₁)/√2
    """
    if sign not in ('minus', 'plus'):
        raise InputError(f"未知分束器类型: {sign}")
    if state.frame is not Frame.LAB:
        raise FrameMismatch("理想分束器作用于实验室系状态")
    n = state.ladder_max
    partner = 1 if sign == 'minus' else -1
    if n < 1:
        raise PopulationOutsideModel("阶梯截断不含耦合对")

    pops = state.populations()
    outside = float(pops.sum() - pops[n] - pops[n + partner])
    if outside >= OUTSIDE_MODEL_LIMIT:
        raise PopulationOutsideModel(f"耦合对之外的布居 {outside:.2e} ≥ {OUTSIDE_MODEL_LIMIT}")

    amplitudes = state.amplitudes.copy()
    home, other = state.amplitudes[n], state.amplitudes[n + partner]
    amplitudes[n] = (home - other) / math.sqrt(2.0)
    amplitudes[n + partner] = (home + other) / math.sqrt(2.0)
    return state.evolve(amplitudes)


def _column_populations(pulse: PulseSpec, kappa: float, units: ScaledUnits, ladder_max: int) -> np.ndarray:
    params = _internal(pulse, units)
    ham = rotating_hamiltonian(pulse, np.array([kappa]), units, ladder_max)
    propagator, _ = _rk4_propagator(ham, params['duration'], params['max_step'])
    return np.abs(propagator[0, :, ladder_max]) ** 2


def _population_change(small: np.ndarray, large: np.ndarray) -> float:
    pad = (large.size - small.size) // 2
    return float(np.max(np.abs(np.pad(small, pad) - large)))


def truncation_convergence(pulse: PulseSpec, kbar: float, units: ScaledUnits, momentum_offset: float = 0.0) -> int:
    """
    推荐的阶梯截断 N

    N 从 1 开始加倍，直到 N 与 2N 的各阶布居最大差 < 1e-8，
    再向下寻找满足同一判据的最小 N。

    Args:
        pulse: 脉冲参数
        kbar: 准波数 (1/m)
        units: 单位换算
        momentum_offset: 动量偏移 (kg·m/s)
    """
    kappa = units.to_internal(kbar, 'wavenumber') + units.to_internal(momentum_offset, 'momentum')
    n = 1
    while True:
        reference = _column_populations(pulse, kappa, units, 2 * n)
        change = _population_change(_column_populations(pulse, kappa, units, n), reference)
        logger.debug(f"截断收敛: N={n} 与 N={2 * n} 最大布居差 {change:.2e}")
        if change < CONVERGENCE_TOLERANCE:
            break
        if 2 * n > MAX_LADDER:
            raise NoConvergence(f"N={MAX_LADDER} 仍未收敛 (差 {change:.2e})")
        n *= 2

    for candidate in range(1, n + 1):
        if _population_change(_column_populations(pulse, kappa, units, candidate), reference) < CONVERGENCE_TOLERANCE:
            return candidate
    return n
