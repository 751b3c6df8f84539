import math

import numpy as np
import pytest
from scipy.integrate import quad

from ladder.base import AcceleratedSegment, Frame, FreeSegment, GaussianInit
from ladder.errors import FrameMismatch
from ladder.propagation import accelerated_evolve, free_evolve, tau_phase
from ladder.pulse import ideal_splitter
from ladder.units import CONSTANTS
from ladder.wavepacket import init_gaussian, observables, peak_analysis, reconstruct_spatial

W = 3e-6


@pytest.fixture
def state(units):
    return init_gaussian(GaussianInit(width_w=W, kbar_points=256), units)


def test_free_evolution_composes(state):
    once = free_evolve(state, FreeSegment(7e-9))
    twice = free_evolve(free_evolve(state, FreeSegment(3e-9)), FreeSegment(4e-9))
    np.testing.assert_allclose(twice.amplitudes, once.amplitudes, rtol=1e-10, atol=1e-14)
    assert twice.time_stamp_si == pytest.approx(7e-9, rel=1e-12)


def test_free_evolution_phase_of_upper_order(units, laser):
    # k̄ = 0 列上 n = 1 的相位 exp(-iT·ω_rec)
    narrow = init_gaussian(GaussianInit(width_w=W, kbar_points=257), units)
    split = ideal_splitter(narrow, 'minus')
    evolved = free_evolve(split, FreeSegment(1e-9))
    center = narrow.kbar.size // 2
    assert narrow.kbar[center] == pytest.approx(0.0, abs=1e-15)
    n = narrow.ladder_max
    ratio = (evolved.amplitudes[n + 1, center] / split.amplitudes[n + 1, center]) \
        / (evolved.amplitudes[n, center] / split.amplitudes[n, center])
    assert ratio == pytest.approx(np.exp(-1j * laser.recoil_frequency * 1e-9), abs=1e-9)


def test_accelerated_segments_compose(state):
    a = 1e10
    once = accelerated_evolve(state, AcceleratedSegment(10e-9, a))
    twice = accelerated_evolve(accelerated_evolve(state, AcceleratedSegment(4e-9, a)), AcceleratedSegment(6e-9, a))
    assert twice.momentum_offset == pytest.approx(once.momentum_offset, rel=1e-12)
    np.testing.assert_allclose(twice.amplitudes, once.amplitudes, rtol=1e-9, atol=1e-12)


def test_zero_acceleration_is_free(state):
    free = free_evolve(state, FreeSegment(5e-9))
    accel = accelerated_evolve(state, AcceleratedSegment(5e-9, 0.0))
    np.testing.assert_allclose(accel.amplitudes, free.amplitudes, rtol=1e-14, atol=1e-16)
    assert accel.momentum_offset == state.momentum_offset


def test_tau_phase_matches_integral():
    seg = AcceleratedSegment(10e-9, 1e10)
    m, hbar = CONSTANTS.electron_mass, CONSTANTS.hbar
    for p in (0.0, 3.2e-25, -1.1e-24):
        integral, _ = quad(lambda t: (p + m * seg.acceleration * t) ** 2 / (2 * m), 0.0, seg.duration,
                           epsabs=0.0, epsrel=1e-13)
        assert tau_phase(p, seg) == pytest.approx(integral / hbar, rel=1e-10)
    assert tau_phase(0.0, seg) == pytest.approx(0.144, abs=1e-3)


def test_tau_phase_array():
    seg = AcceleratedSegment(10e-9, 1e10)
    p = np.linspace(-1e-24, 1e-24, 5)
    np.testing.assert_allclose(tau_phase(p, seg), [tau_phase(float(v), seg) for v in p], rtol=1e-14)


def test_accelerated_phase_matches_tau(state, units):
    seg = AcceleratedSegment(10e-9, 1e10)
    evolved = accelerated_evolve(state, seg)
    n = state.ladder_max
    phase = np.angle(evolved.amplitudes[n] / state.amplitudes[n])
    momenta = units.from_internal(state.kbar + state.momentum_offset, 'momentum')
    expected = np.angle(np.exp(-1j * tau_phase(momenta, seg)))
    np.testing.assert_allclose(np.exp(1j * phase), np.exp(1j * expected), atol=1e-9)


def _center(state, units):
    density = reconstruct_spatial(state, (-40e-6, 40e-6), 4001)
    return peak_analysis(density, smoothing=0.0)[0].center


def test_ehrenfest_centroid(state, units):
    seg = AcceleratedSegment(10e-9, 1e10)
    evolved = accelerated_evolve(state, seg)
    assert _center(evolved, units) == pytest.approx(0.5 * seg.acceleration * seg.duration ** 2, abs=2e-8)
    obs = observables(evolved)
    assert obs.mean_momentum == pytest.approx(CONSTANTS.electron_mass * 100.0, rel=1e-6)


def test_opposite_acceleration_mirrors(state, units):
    up = accelerated_evolve(state, AcceleratedSegment(10e-9, 1e10))
    down = accelerated_evolve(state, AcceleratedSegment(10e-9, -1e10))
    assert _center(down, units) == pytest.approx(-_center(up, units), abs=2e-8)
    assert down.momentum_offset == pytest.approx(-up.momentum_offset, rel=1e-14)


def test_back_to_back_acceleration_restores_momentum(state):
    there = accelerated_evolve(state, AcceleratedSegment(10e-9, 1e10))
    back = accelerated_evolve(there, AcceleratedSegment(10e-9, -1e10))
    assert back.momentum_offset == 0.0
    assert observables(back).mean_momentum == observables(state).mean_momentum
    np.testing.assert_array_equal(back.populations(), state.populations())


def test_free_dispersion(state, units):
    # σ(T)² = w² + (ħT/(2mw))²
    T = 12e-9
    evolved = free_evolve(state, FreeSegment(T))
    density = reconstruct_spatial(evolved, (-40e-6, 40e-6), 4001)
    width = peak_analysis(density, smoothing=0.0)[0].width
    spread = CONSTANTS.hbar * T / (2 * CONSTANTS.electron_mass * W)
    assert width == pytest.approx(math.sqrt(W ** 2 + spread ** 2), rel=1e-3)
    assert math.sqrt(1 + (spread / W) ** 2) - 1 == pytest.approx(3.0e-3, rel=2e-2)


def test_segments_reject_rotating_state(state):
    rotating = state.evolve(state.amplitudes, frame=Frame.ROTATING)
    with pytest.raises(FrameMismatch):
        free_evolve(rotating, FreeSegment(1e-9))
    with pytest.raises(FrameMismatch):
        accelerated_evolve(rotating, AcceleratedSegment(1e-9, 1e10))


def test_segment_validation():
    with pytest.raises(ValueError):
        FreeSegment(-1e-9)
    with pytest.raises(ValueError):
        AcceleratedSegment(-1e-9, 1e10)
