import sys
from dataclasses import replace
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from interferometer.sequence import RamseyBordeConfig, simulate  # noqa: E402
from ladder.base import GaussianInit  # noqa: E402
from ladder.units import LaserConfig, ScaledUnits  # noqa: E402

# 参考参数: 1064 nm, 0.5 W/μm², T = 12 ns, T' = 10 ns, T'' = 40 ns, a = 1e10 m/s²
WIDTH_W = 3e-6
WINDOW = (-150e-6, 150e-6)
SPATIAL_POINTS = 4096


@pytest.fixture(scope="session")
def laser():
    return LaserConfig(wavelength=1064e-9, intensity_1=0.5e12, intensity_2=0.5e12)


@pytest.fixture(scope="session")
def units(laser):
    return ScaledUnits.from_laser(laser)


@pytest.fixture(scope="session")
def ref_cfg(laser):
    return RamseyBordeConfig(laser=laser, T=12e-9, T_prime=10e-9, T_doubleprime=40e-9, acceleration=1e10)


@pytest.fixture(scope="session")
def ref_init():
    return GaussianInit(width_w=WIDTH_W, kbar_points=256)


@pytest.fixture(scope="session")
def ref_run(ref_cfg, ref_init):
    """参考参数下的完整模拟 (末态, 密度)"""
    return simulate(ref_cfg, ref_init, WINDOW, SPATIAL_POINTS)


@pytest.fixture(scope="session")
def ref_short_run(ref_cfg, ref_init):
    """T'' = 0 的完整模拟"""
    return simulate(replace(ref_cfg, T_doubleprime=0.0), ref_init, WINDOW, SPATIAL_POINTS)
