"""核心处理器 - 每个命令对应一个方法
simulate: 完整 Ramsey-Bordé 序列 + 空间密度 + 束报告
splitter: 单脉冲转移概率扫描 (数值 vs 二能级)
sweep:    条纹扫描 (加速度 a 或 T')
paths:    经典路径与预测束 (coherent 规则下演化各路径分量)
"""
import json
import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from interferometer.beams import BeamReport, FringeRow, beam_fringe, beam_report
from interferometer.components import beam_components, beam_populations, coherent_beams
from interferometer.paths import enumerate_paths, merge_beams
from interferometer.sequence import (
    build_ramsey_borde, closed_port_model, effective_gap, fringe_period_acceleration,
    fringe_period_finite_pulse, phase_shift_prediction, recombiner_detuning, simulate,
    splitter_separation
)
from ladder.base import TwoLevelModel
from ladder.errors import ConfigError
from ladder.pulse import transfer_probability, two_level_evolution
from ladder.units import CONSTANTS, recoil_velocity, weak_coupling_margin
from ladder.wavepacket import init_gaussian, peak_analysis
from run_config import RunConfig, worker_count

logger = logging.getLogger(__name__)

SCANS = ('detuning', 'duration', 'kbar')
# 二能级近似的适用判据 Ω/ω_rec
TWO_LEVEL_GUARD = 0.25


def write_csv(path: Path, header: str, rows: Sequence[Sequence[float]]) -> None:
    """17 位有效数字、固定列序、\\n 换行"""
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")


def write_json(path: Path, payload: dict) -> None:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(payload, f, ensure_ascii=False, indent=2)
        f.write("\n")


@dataclass
class RunSummary:
    config: dict
    derived: dict
    peaks: List[dict]
    beams: List[BeamReport]
    norm: float
    norm_drift: float
    wall_time_s: Optional[float] = None

    def to_dict(self) -> dict:
        payload = {
            'config': self.config,
            'derived': self.derived,
            'peaks': self.peaks,
            'beams': [b.to_dict() for b in self.beams],
            'norm': self.norm,
            'norm_drift': self.norm_drift,
        }
        if self.wall_time_s is not None:
            payload['wall_time_s'] = self.wall_time_s
        return payload


class KDIProcessor:
    """
    Kapitza-Dirac 干涉仪处理器

    输入: RunConfig
    输出: out_dir 下的 CSV / JSON 文件
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.laser = config.laser_config()
        self.units = config.units()
        self.rb = config.ramsey_borde()
        self.init = config.gaussian_init()
        self.workers = worker_count()

    def derived_quantities(self) -> dict:
        laser, rb = self.laser, self.rb
        return {
            'recoil_frequency_rad_s': laser.recoil_frequency,
            'g1g2_rad_s': laser.g1g2,
            'pulse_duration_s': rb.pulse_duration,
            'delta_phi_rad': phase_shift_prediction(rb),
            'weak_coupling_margin': weak_coupling_margin(laser.coupling_intensity, laser.omega, laser.k_L),
            'recoil_velocity_mps': recoil_velocity(laser.k_L),
            'splitter_separation_m': splitter_separation(rb),
            'recombiner_detuning_rad_s': recombiner_detuning(rb),
            'fringe_period_acceleration_mps2': fringe_period_acceleration(rb),
            'effective_gap_s': effective_gap(rb),
            'fringe_period_finite_pulse_mps2': fringe_period_finite_pulse(rb),
            'finite_pulse_phase_rad': closed_port_model(rb, self.init).phase,
            'total_duration_s': build_ramsey_borde(rb).total_duration,
        }

    def _peak_options(self) -> dict:
        analysis = self.config.analysis
        return {
            'threshold': analysis.peak_threshold,
            'smoothing': analysis.smoothing_um * 1e-6,
            'min_mass': analysis.min_peak_mass,
        }

    def _predicted_beams(self, with_components: bool = True):
        """
        经典路径与合并后的束

        coherent 规则下束位置取各束分量相干叠加的预测；
        不需要分量且非 coherent 规则时不做波函数演化。
        """
        rule = self.config.analysis.pulse_rule
        paths = enumerate_paths(self.rb, rule, self.config.wavepacket.mean_velocity_mps)
        beams = merge_beams(paths, self.init.width_w)
        if not with_components and rule != 'coherent':
            return paths, beams, None
        components = beam_components(self.rb, self.init, beams)
        if rule == 'coherent':
            beams = coherent_beams(
                beams, components, self.config.window_m(), self.config.numerics.spatial_points,
                self.init.width_w, self._peak_options(), max_workers=self.workers
            )
        return paths, beams, components

    def simulate(self, out_dir) -> RunSummary:
        """
        运行完整序列并写出密度 CSV 与摘要 JSON

        Args:
            out_dir: 输出目录

        Returns:
            RunSummary
        """
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        analysis = self.config.analysis
        start = time.perf_counter()

        def on_step(current, total, step):
            logger.info(f"序列进度 {current}/{total}")

        initial_norm = init_gaussian(self.init, self.units, self.rb.ladder_max).norm()
        final, density = simulate(
            self.rb, self.init, self.config.window_m(), self.config.numerics.spatial_points,
            max_workers=self.workers, progress_callback=on_step
        )
        peaks = peak_analysis(density, **self._peak_options())
        logger.info(f"检测到 {len(peaks)} 个峰")
        _, beams, components = self._predicted_beams()
        reports = beam_report(
            density, peaks, beams, self.init.width_w, analysis.resolve_factor,
            populations=beam_populations(final, beams, components)
        )

        norm = final.norm()
        summary = RunSummary(
            config=self.config.to_dict(),
            derived=self.derived_quantities(),
            peaks=[{'center_m': p.center, 'mass': p.mass, 'width_m': p.width} for p in peaks],
            beams=reports,
            norm=norm,
            norm_drift=abs(norm - initial_norm),
            wall_time_s=time.perf_counter() - start if self.config.output.include_wall_time else None,
        )
        density.to_csv(out_path / self.config.output.csv_path)
        write_json(out_path / self.config.output.json_path, summary.to_dict())
        logger.info(f"结果已写入: {out_path}")
        return summary

    def splitter_scan(self, scan: str) -> np.ndarray:
        """
        单脉冲转移概率扫描

        Args:
            scan: detuning (Δω, rad/s) | duration (s) | kbar (1/m)

        Returns:
            (points, 3) 数组: 扫描参数, 数值转移概率, 二能级转移概率
        """
        if scan not in SCANS:
            raise ConfigError('scan', f"未知扫描对象: {scan}")
        laser, units = self.laser, self.units
        pulse = self.rb.splitter_pulse()
        points = self.config.splitter.points
        span = self.config.splitter.span_factor
        omega = pulse.g1g2
        offset = self.init.mean_momentum
        drift_detuning = 2.0 * laser.k_L * offset / CONSTANTS.electron_mass
        model = TwoLevelModel(omega, 0.0)
        if model.guard_ratio(laser.recoil_frequency) >= TWO_LEVEL_GUARD:
            logger.warning(f"Ω/ω_rec = {model.guard_ratio(laser.recoil_frequency):.3f}，二能级近似不可靠")

        rows = []
        if scan == 'detuning':
            for delta in np.linspace(-span * omega, span * omega, points):
                shifted = replace(pulse, delta_omega=pulse.delta_omega + delta)
                numeric = transfer_probability(shifted, [0.0], units, momentum_offset=offset)[0]
                analytic = two_level_evolution(TwoLevelModel(omega, delta + drift_detuning), pulse.duration)
                rows.append((shifted.delta_omega, numeric, abs(analytic[1, 0]) ** 2))
        elif scan == 'duration':
            for t in np.linspace(0.0, 4.0 * pulse.duration, points):
                numeric = transfer_probability(replace(pulse, duration=t), [0.0], units, momentum_offset=offset)[0]
                analytic = two_level_evolution(TwoLevelModel(omega, drift_detuning), t)
                rows.append((t, numeric, abs(analytic[1, 0]) ** 2))
        else:
            sigma = 1.0 / (2.0 * self.init.width_w)
            kbar = np.linspace(-self.init.span_sigmas * sigma, self.init.span_sigmas * sigma, points)
            numeric = transfer_probability(pulse, kbar, units, momentum_offset=offset)
            for k, p in zip(kbar, numeric):
                delta = 2.0 * CONSTANTS.hbar * laser.k_L * k / CONSTANTS.electron_mass + drift_detuning
                analytic = two_level_evolution(TwoLevelModel(omega, delta), pulse.duration)
                rows.append((k, p, abs(analytic[1, 0]) ** 2))
        return np.array(rows, dtype=float)

    def splitter(self, out_dir, scan: str) -> Path:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        rows = self.splitter_scan(scan)
        target = out_path / f"splitter_{scan}.csv"
        write_csv(target, "param,transfer_numeric,transfer_two_level", rows)
        logger.info(f"分束扫描 ({scan}) {len(rows)} 点已写入: {target}")
        return target

    def sweep(self, out_dir, param: str, start: float, stop: float, points: Optional[int] = None) -> List[FringeRow]:
        """
        条纹扫描

        Args:
            param: 'a' (m/s²) 或 'T_prime' (ns)
            start, stop: 扫描范围 (单位同上)
            points: 扫描点数，默认取配置 sweep.points
        """
        points = self.config.sweep.points if points is None else points
        if points < 1:
            raise ConfigError('sweep.points', "至少为 1")
        values = np.linspace(start, stop, points)
        if param == 'T_prime':
            if np.any(values < 0):
                raise ConfigError('sweep.T_prime', "不能为负")
            values = values * 1e-9
        elif param != 'a':
            raise ConfigError('param', f"未知扫描参数: {param}")

        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        rows = beam_fringe(
            self.rb, self.init, param, values,
            pulse_rule=self.config.analysis.pulse_rule,
            resolve_factor=self.config.analysis.resolve_factor,
            max_workers=self.workers,
        )
        target = out_path / f"sweep_{param}.csv"
        write_csv(target, "param,pop_I,pop_V,delta_phi_rad,model_I,model_V", [r.values() for r in rows])
        logger.info(f"条纹扫描已写入: {target}")
        return rows

    def paths(self, out_dir) -> dict:
        """写出经典路径与预测束 JSON"""
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        paths, beams, _ = self._predicted_beams(with_components=False)
        payload = {
            'pulse_rule': self.config.analysis.pulse_rule,
            'paths': [p.to_dict() for p in paths],
            'beams': [b.to_dict() for b in beams],
        }
        write_json(out_path / "paths.json", payload)
        logger.info(f"{len(paths)} 条路径, {len(beams)} 个束")
        return payload
