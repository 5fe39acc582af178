import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robosar.echo_sim import PointTarget, add_noise, simulate_baseband, two_way_range
from robosar.errors import DegenerateGeometryError
from robosar.geometry import AntennaArray
from robosar.waveform import chirp_slope, fast_time_count

from conftest import make_positions


@pytest.fixture(scope="module")
def mono(table1):
    """Stationary monostatic radar at the origin."""
    return make_positions(table1, speed=0.0, array=AntennaArray.colocated(table1))


def test_zero_targets(table1, mono):
    cube = simulate_baseband([], mono, table1)
    assert cube.data.shape == (4, 4, 64, 175)
    assert not cube.data.any()


def test_beat_frequency(table1, mono):
    R = 2.0
    cube = simulate_baseband([PointTarget((0, R, 0))], mono, table1)
    n_dft = 4 * 175
    spec = np.abs(np.fft.fft(cube.data[0, 0, 0], n=n_dft))
    f_beat = 2 * chirp_slope(table1) * R / table1.c
    expected_bin = f_beat / table1.f_sample * n_dft
    assert abs(int(np.argmax(spec)) - expected_bin) <= 1


def test_cancelling_targets(table1, mono):
    t = [PointTarget((0.1, 2, 0), 1.5 - 0.5j), PointTarget((0.1, 2, 0), -(1.5 - 0.5j))]
    assert not simulate_baseband(t, mono, table1).data.any()


def test_phase_against_scalar_reference(table1):
    pos = make_positions(table1, speed=0.4)
    tgt = PointTarget((0.03, 1.7, 0.1), 1.0)
    cube = simulate_baseband([tgt], pos, table1)
    i, j, m = 2, 1, 17
    r = math.dist(pos.tx[i, m], tgt.position) + math.dist(pos.rx[i, j, m], tgt.position)
    gamma = table1.bandwidth / table1.t_chirp
    for n in (0, 1, 50, 174):
        ref = 2 * math.pi / table1.c * (table1.f_start + gamma * n / table1.f_sample) * r
        err = cmath.phase(cube.data[i, j, m, n] * cmath.exp(-1j * ref))
        assert abs(err) < 1e-9


@given(st.lists(st.tuples(st.floats(-0.5, 0.5), st.floats(1.0, 4.0),
                          st.floats(-2, 2), st.floats(-2, 2)), min_size=2, max_size=4))
def test_superposition(spec):
    from robosar.waveform import RadarWaveformParams

    p = RadarWaveformParams(n_chirps=8, t_frame=8 * 200e-6)
    pos = make_positions(p)
    targets = [PointTarget((x, y, 0.0), complex(a, b)) for x, y, a, b in spec]
    whole = simulate_baseband(targets, pos, p).data
    k = len(targets) // 2
    parts = simulate_baseband(targets[:k], pos, p).data + simulate_baseband(targets[k:], pos, p).data
    scale = max(np.abs(whole).max(), 1e-300)
    assert np.abs(whole - parts).max() <= 1e-12 * scale * len(targets)


def test_range_shift_phase(table1, mono):
    R, dR = 2.0, 1e-4
    a = simulate_baseband([PointTarget((0, R, 0))], mono, table1).data[0, 0, 0, 0]
    b = simulate_baseband([PointTarget((0, R + dR, 0))], mono, table1).data[0, 0, 0, 0]
    expected = 2 * math.pi * table1.f_start / table1.c * 2 * dR
    assert cmath.phase(b / a) == pytest.approx(expected, abs=1e-9)


def test_coincident_target_rejected(table1, mono):
    with pytest.raises(DegenerateGeometryError):
        simulate_baseband([PointTarget((0, 0, 0))], mono, table1)


def test_target_beyond_range_gate(table1, mono):
    with pytest.raises(DegenerateGeometryError):
        simulate_baseband([PointTarget((0, 7.0, 0))], mono, table1)


def test_per_sample_mode_differs_slightly(table1):
    start = make_positions(table1, speed=1.0)
    per = make_positions(table1, speed=1.0, sampling="per_fast_time_sample")
    tgt = [PointTarget((0.0, 2.0, 0.0))]
    a = simulate_baseband(tgt, start, table1).data
    b = simulate_baseband(tgt, per, table1).data
    assert np.array_equal(a[..., 0], b[..., 0])
    # platform moves 0.18 mm during a chirp: a small but visible phase drift
    dphi = np.abs(np.angle(b[..., -1] / a[..., -1]))
    assert 0 < dphi.max() < 0.5


def test_two_way_range_monostatic():
    assert two_way_range(np.zeros(3), np.zeros(3), np.array([0, 3.0, 4.0])) == 10.0


def test_range_taper(table1, mono):
    near = simulate_baseband([PointTarget((0, 1.0, 0))], mono, table1, range_taper=2.0)
    assert np.abs(near.data).max() == pytest.approx(4.0)


def test_noise_zero_power_identity(table1, mono):
    cube = simulate_baseband([PointTarget((0, 2, 0))], mono, table1)
    assert add_noise(cube, 0.0, seed=1) is cube


def test_noise_power(table1, mono):
    cube = simulate_baseband([], mono, table1)  # 4*4*64*175 = 179200 samples per frame
    big = type(cube)(np.zeros((10, 10, 100, 1000), complex), table1, mono, 1)
    noisy = add_noise(big, 2.5, seed=3)
    assert np.mean(np.abs(noisy.data) ** 2) == pytest.approx(2.5, rel=0.01)
    # circular: real and imaginary halves carry equal power
    assert np.var(noisy.data.real) == pytest.approx(1.25, rel=0.01)


def test_noise_deterministic(table1, mono):
    cube = simulate_baseband([], mono, table1)
    assert np.array_equal(add_noise(cube, 1.0, 5).data, add_noise(cube, 1.0, 5).data)
    assert not np.array_equal(add_noise(cube, 1.0, 5).data, add_noise(cube, 1.0, 6).data)


def test_negative_noise_rejected(table1, mono):
    cube = simulate_baseband([], mono, table1)
    with pytest.raises(ValueError):
        add_noise(cube, -1.0, 0)
