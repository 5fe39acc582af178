"""Sensor vibration design: sidelobe placement and Bessel-ratio sidelobe level.

A sinusoidal displacement of amplitude ``A`` along the line of sight
phase-modulates the echo with index ``a = 2*pi*2*A/lambda``. The first
paired Doppler sidelobes sit at the vibration frequency with level
``J1(a)/J0(a)`` relative to the main lobe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# First positive zero of J0.
J0_FIRST_ZERO = 2.404825557695773

_SERIES_TERMS = 30
_SERIES_LIMIT = 8.0


def _bessel_series(order: int, x: float) -> float:
    # sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)
    half = 0.5 * x
    term = half**order / math.factorial(order)
    total = term
    q = -half * half
    for k in range(1, _SERIES_TERMS):
        term *= q / (k * (k + order))
        total += term
    return total


def _bessel_miller(order: int, x: float) -> float:
    """Backward recurrence normalized by ``J0 + 2*sum J_2k = 1``."""
    start = 2 * ((int(1.5 * x) + 40) // 2)  # even, well above x
    j_next, j = 0.0, 1e-300
    norm = 0.0
    result = 0.0
    for n in range(start, 0, -1):
        j_prev = 2 * n / x * j - j_next
        j_next, j = j, j_prev
        if n - 1 == order:
            result = j
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm += 2 * j
        if abs(j) > 1e250:  # rescale to stay finite
            j *= 1e-250
            j_next *= 1e-250
            norm *= 1e-250
            result *= 1e-250
    norm += j  # J0 term
    return result / norm


def bessel_j(order: int, x: float) -> float:
    """Bessel function of the first kind for integer ``order`` >= 0.

    Power series for ``|x| <= 8``, Miller backward recurrence beyond.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    x = float(x)
    sign = -1.0 if (x < 0 and order % 2) else 1.0
    ax = abs(x)
    if ax == 0:
        return 1.0 if order == 0 else 0.0
    if ax <= _SERIES_LIMIT:
        return sign * _bessel_series(order, ax)
    return sign * _bessel_miller(order, ax)


def bessel_j0(x: float) -> float:
    return bessel_j(0, x)


def bessel_j1(x: float) -> float:
    return bessel_j(1, x)


def modulation_index(amplitude: float, wavelength: float) -> float:
    """Phase-modulation index ``2*pi*(2*A)/lambda`` of a line-of-sight vibration."""
    return 2 * math.pi * 2 * amplitude / wavelength


def vib_frequency_for_sidelobe(v_ego: float, wavelength: float, x_vib: float, r_zd: float) -> float:
    """Vibration frequency whose Doppler matches a scatterer at cross-range ``x_vib``."""
    if r_zd <= 0:
        raise ValueError("closest-approach range must be positive")
    return 2 * v_ego / wavelength * x_vib / math.hypot(x_vib, r_zd)


def sidelobe_level_for_modulation(a: float) -> float:
    """``20*log10(J1(a)/J0(a))`` in dB for ``0 <= a < J0_FIRST_ZERO``."""
    if not 0 <= a < J0_FIRST_ZERO:
        raise ValueError(f"modulation index {a} outside [0, {J0_FIRST_ZERO})")
    if a == 0:
        return -math.inf
    return 20 * math.log10(bessel_j1(a) / bessel_j0(a))


def vib_amplitude_for_sidelobe_level(level_db: float, wavelength: float, tol: float = 1e-12) -> float:
    """Vibration amplitude producing a first sidelobe ``level_db`` below the peak.

    Solves the Bessel-ratio relation for the modulation index by bisection
    in ``log(a)`` (the level is monotone on the admissible interval) and
    converts with ``A = a*lambda/(4*pi)``.
    """
    if not level_db < 0:
        raise ValueError(f"sidelobe level must be negative, got {level_db} dB")
    # J1/J0 > a/2 on the interval, so this lower end is always below the root.
    lo = math.log(2 * 10 ** (level_db / 20) / 4)
    hi = math.log(J0_FIRST_ZERO * (1 - 1e-12))

    def f(log_a):
        return sidelobe_level_for_modulation(math.exp(log_a)) - level_db

    if f(lo) > 0 or f(hi) < 0:
        raise ValueError(f"level {level_db} dB not bracketed")
    while math.exp(hi) - math.exp(lo) > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    a = math.exp(0.5 * (lo + hi))
    return a * wavelength / (4 * math.pi)


@dataclass(frozen=True)
class VibrationDesign:
    x_vib: float
    r_zd: float
    v_ego: float
    wavelength: float
    level_db: float
    frequency: float
    amplitude: float
    modulation_index: float


def design_vibration(x_vib: float, r_zd: float, v_ego: float, wavelength: float,
                     level_db: float) -> VibrationDesign:
    """Frequency and amplitude placing a ``level_db`` sidelobe pair at ``+-x_vib``."""
    amp = vib_amplitude_for_sidelobe_level(level_db, wavelength)
    return VibrationDesign(
        x_vib=x_vib,
        r_zd=r_zd,
        v_ego=v_ego,
        wavelength=wavelength,
        level_db=level_db,
        frequency=vib_frequency_for_sidelobe(v_ego, wavelength, x_vib, r_zd),
        amplitude=amp,
        modulation_index=modulation_index(amp, wavelength),
    )
