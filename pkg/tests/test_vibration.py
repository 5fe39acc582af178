import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from robosar.vibration import (
    J0_FIRST_ZERO,
    bessel_j,
    bessel_j0,
    bessel_j1,
    design_vibration,
    modulation_index,
    sidelobe_level_for_modulation,
    vib_amplitude_for_sidelobe_level,
    vib_frequency_for_sidelobe,
)

C = 299_792_458.0
LAM = C / 78e9


def test_frequency_example():
    assert vib_frequency_for_sidelobe(0.368, LAM, 0.04, 2.0) == pytest.approx(3.83, abs=0.01)


def test_frequency_limits():
    assert vib_frequency_for_sidelobe(0.368, LAM, 0.0, 2.0) == 0.0
    bound = 2 * 0.368 / LAM
    assert vib_frequency_for_sidelobe(0.368, LAM, 1e9, 2.0) == pytest.approx(bound, rel=1e-12)
    assert vib_frequency_for_sidelobe(0.368, LAM, -0.04, 2.0) < 0
    with pytest.raises(ValueError):
        vib_frequency_for_sidelobe(0.368, LAM, 0.04, 0.0)


def test_level_examples():
    assert sidelobe_level_for_modulation(1.044) == pytest.approx(-4.3, abs=0.05)
    assert sidelobe_level_for_modulation(1.0) == pytest.approx(
        20 * math.log10(0.44005 / 0.76520), abs=1e-3)
    assert sidelobe_level_for_modulation(1.0) == pytest.approx(-4.80, abs=0.01)
    assert sidelobe_level_for_modulation(0.0) == -math.inf
    assert sidelobe_level_for_modulation(1e-8) < -160


@pytest.mark.parametrize("a", [-0.1, J0_FIRST_ZERO, 3.0])
def test_level_domain(a):
    with pytest.raises(ValueError):
        sidelobe_level_for_modulation(a)


def test_amplitude_example():
    assert vib_amplitude_for_sidelobe_level(-4.3, LAM) == pytest.approx(0.319e-3, abs=0.002e-3)


def test_amplitude_small_level_linearization():
    approx = LAM / (4 * math.pi) * 2 * 10 ** (-60 / 20)
    assert vib_amplitude_for_sidelobe_level(-60.0, LAM) == pytest.approx(approx, rel=0.01)


@pytest.mark.parametrize("level", [0.0, 1.0])
def test_amplitude_rejects_nonnegative(level):
    with pytest.raises(ValueError):
        vib_amplitude_for_sidelobe_level(level, LAM)


@given(st.floats(-40.0, -3.0))
def test_round_trip(level):
    amp = vib_amplitude_for_sidelobe_level(level, LAM)
    assert abs(sidelobe_level_for_modulation(modulation_index(amp, LAM)) - level) <= 1e-6


@given(st.floats(1e-4, J0_FIRST_ZERO - 1e-3), st.floats(1e-6, 0.1))
def test_monotone(a, da):
    b = min(a + da, J0_FIRST_ZERO - 1e-4)
    if b > a:
        assert sidelobe_level_for_modulation(b) > sidelobe_level_for_modulation(a)


@given(st.floats(-40.0, -1.0), st.floats(0.5, 4.0))
def test_amplitude_linear_in_wavelength(level, k):
    a1 = vib_amplitude_for_sidelobe_level(level, LAM)
    ak = vib_amplitude_for_sidelobe_level(level, k * LAM)
    assert ak == pytest.approx(k * a1, rel=1e-9)


def test_modulation_index():
    assert modulation_index(0.319e-3, LAM) == pytest.approx(4 * math.pi * 0.319e-3 / LAM)
    assert modulation_index(0.319e-3, LAM) == pytest.approx(1.043, abs=0.01)


@pytest.mark.parametrize("order", [0, 1, 2, 5])
def test_bessel_against_mpmath(order):
    mpmath.mp.dps = 30
    for x in np.concatenate([np.linspace(0, 8, 81), np.linspace(8.1, 40, 40)]):
        ref = float(mpmath.besselj(order, x))
        assert abs(bessel_j(order, x) - ref) <= 1e-10


@given(st.floats(-30.0, 30.0))
def test_bessel_against_scipy(x):
    assert bessel_j0(x) == pytest.approx(special.j0(x), abs=1e-10)
    assert bessel_j1(x) == pytest.approx(special.j1(x), abs=1e-10)


def test_bessel_first_zero():
    assert abs(bessel_j0(J0_FIRST_ZERO)) < 1e-12
    with pytest.raises(ValueError):
        bessel_j(-1, 1.0)


def test_design_vibration():
    d = design_vibration(0.04, 2.0, 0.368, LAM, -4.3)
    assert d.frequency == pytest.approx(3.83, abs=0.01)
    assert d.amplitude == pytest.approx(0.319e-3, abs=0.002e-3)
    assert d.modulation_index == pytest.approx(modulation_index(d.amplitude, LAM))
