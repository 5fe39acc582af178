"""Windowed fast-time DFT producing two-way range profiles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .waveform import RadarWaveformParams, chirp_slope, fast_time_count

# Half-power main-lobe width in DFT bins of the continuous window transform.
_BROADENING = {"rectangular": 0.88448, "hann": 1.4381}


@dataclass(frozen=True)
class WindowFunction:
    kind: str = "hann"

    def __post_init__(self):
        if self.kind not in _BROADENING:
            raise ValueError(f"unknown window {self.kind!r}; choose from {sorted(_BROADENING)}")

    @property
    def broadening(self) -> float:
        """Half-power main-lobe broadening factor a_w."""
        return _BROADENING[self.kind]

    def phase_center(self, n: int) -> float:
        """Sample index about which ``samples(n)`` is even-symmetric."""
        return n / 2 if self.kind == "hann" else (n - 1) / 2

    def samples(self, n: int) -> np.ndarray:
        if self.kind == "rectangular":
            return np.ones(n)
        # periodic Hann
        return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)


@dataclass(frozen=True)
class RangeProfileSet:
    """Range profiles ``data[tx, rx, slow, bin]`` on a two-way range axis.

    Bin ``k`` sits at two-way range ``k * bin_spacing``.
    """

    data: np.ndarray
    zero_pad_factor: int
    bin_spacing: float
    window: WindowFunction
    params: RadarWaveformParams

    @property
    def n_bins(self) -> int:
        return self.data.shape[-1]

    @property
    def range_axis(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_spacing

    def bin_of(self, two_way_range):
        return np.asarray(two_way_range) / self.bin_spacing

    def range_of(self, bins):
        return np.asarray(bins) * self.bin_spacing

    @property
    def max_range(self) -> float:
        """Largest two-way range that can be linearly interpolated."""
        return (self.n_bins - 1) * self.bin_spacing


def range_bin_spacing(p: RadarWaveformParams, n_dft: int) -> float:
    """Two-way range per DFT bin: ``c * f_s / (slope * n_dft)``."""
    return p.c * p.f_sample / (chirp_slope(p) * n_dft)


def range_compress(cube, window: WindowFunction, zero_pad_factor: int = 8) -> RangeProfileSet:
    """Window and zero-pad each chirp, then take an unnormalized forward DFT.

    The transform length is ``zero_pad_factor * n_fast``; Parseval holds as
    ``sum|w*s|**2 == sum|S|**2 / n_dft``.
    """
    if int(zero_pad_factor) != zero_pad_factor or zero_pad_factor < 1:
        raise ValueError(f"zero_pad_factor must be an integer >= 1, got {zero_pad_factor}")
    zero_pad_factor = int(zero_pad_factor)
    p = cube.params
    n_fast = fast_time_count(p)
    if cube.data.shape[-1] != n_fast:
        raise ValueError("cube fast-time length does not match the waveform")
    n_dft = zero_pad_factor * n_fast
    w = window.samples(n_fast)
    spec = np.fft.fft(cube.data * w, n=n_dft, axis=-1)
    return RangeProfileSet(
        data=spec,
        zero_pad_factor=zero_pad_factor,
        bin_spacing=range_bin_spacing(p, n_dft),
        window=window,
        params=p,
    )


def predicted_range_resolution(p: RadarWaveformParams, window: WindowFunction) -> float:
    """Half-power one-way range resolution ``a_w * c / (2B)``."""
    return window.broadening * p.c / (2 * p.bandwidth)


def window_transform(window: WindowFunction, n: int, omega) -> np.ndarray:
    """DTFT ``sum_n w[n] exp(-j*omega*n)`` evaluated directly."""
    w = window.samples(n)
    omega = np.asarray(omega, dtype=float)
    return np.exp(-1j * omega[..., None] * np.arange(n)) @ w


def closed_form_profile(p: RadarWaveformParams, window: WindowFunction, r, r_target,
                        amplitude: complex = 1.0) -> np.ndarray:
    """Stop-and-go profile of one target: carrier term times shifted window DTFT."""
    n = fast_time_count(p)
    omega = 2 * np.pi * chirp_slope(p) / (p.c * p.f_sample) * (np.asarray(r) - r_target)
    carrier = amplitude * np.exp(1j * 2 * np.pi * p.f_start / p.c * r_target)
    return carrier * window_transform(window, n, omega)
