"""Chirp-sequence FMCW waveform parameters and TDM-MIMO chirp timing."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Iterator, NamedTuple

import numpy as np

from .errors import ConfigurationError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class RadarWaveformParams:
    """Waveform of one chirp-sequence TDM-MIMO sensor.

    Defaults are the 76-80 GHz sensor used for the mobile-robot experiments.
    Times in seconds, frequencies in Hz.
    """

    f_start: float = 76e9
    bandwidth: float = 4e9
    t_chirp: float = 180e-6
    t_rep: float = 200e-6
    n_chirps: int = 256
    t_frame: float = 52e-3
    f_sample: float = 977e3
    n_tx: int = 4
    n_rx: int = 4
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ConfigurationError(f"bandwidth must be positive, got {self.bandwidth}")
        if not self.f_sample > 0:
            raise ConfigurationError(f"f_sample must be positive, got {self.f_sample}")
        if not self.c > 0:
            raise ConfigurationError("propagation speed must be positive")
        if self.f_start < 0:
            raise ConfigurationError("f_start must be non-negative")
        if self.n_tx < 1 or self.n_rx < 1 or self.n_chirps < 1:
            raise ConfigurationError("channel and chirp counts must be >= 1")
        if self.n_chirps % self.n_tx:
            raise ConfigurationError(
                f"n_chirps ({self.n_chirps}) must be a multiple of n_tx ({self.n_tx})"
            )
        if not 0 < self.t_chirp <= self.t_rep:
            raise ConfigurationError("require 0 < t_chirp <= t_rep")
        if self.n_chirps * self.t_rep > self.t_frame * (1 + 1e-12):
            raise ConfigurationError(
                f"{self.n_chirps} chirps at {self.t_rep} s do not fit a {self.t_frame} s frame"
            )
        if math.floor(self.t_chirp * self.f_sample) < 2:
            raise ConfigurationError("fewer than two fast-time samples per chirp")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RadarWaveformParams":
        return cls(**d)


def chirp_slope(p: RadarWaveformParams) -> float:
    """Chirp rate in Hz/s."""
    return p.bandwidth / p.t_chirp


def center_wavelength(p: RadarWaveformParams) -> float:
    """Wavelength at the chirp center frequency ``f_start + B/2``."""
    return p.c / (p.f_start + p.bandwidth / 2)


def fast_time_count(p: RadarWaveformParams) -> int:
    # ADC samples a partial trailing period only if it completes; truncate.
    return int(math.floor(p.t_chirp * p.f_sample))


def slow_time_count(p: RadarWaveformParams) -> int:
    """Slow-time samples per transmitter and frame."""
    return p.n_chirps // p.n_tx


def max_two_way_range(p: RadarWaveformParams) -> float:
    """Two-way range whose beat frequency equals the complex sample rate."""
    return p.c * p.f_sample / chirp_slope(p)


class ChirpDescriptor(NamedTuple):
    frame: int
    slow: int  # slow-time index within the frame for this transmitter
    tx: int
    start: float


@dataclass(frozen=True)
class TdmSchedule:
    """Start times and transmitter assignment of every chirp in a recording.

    Arrays are in transmission order. ``slow`` is the per-transmitter
    slow-time index inside its frame; ``global_slow`` runs across frames.
    """

    frame: np.ndarray
    slow: np.ndarray
    tx: np.ndarray
    start: np.ndarray
    params: RadarWaveformParams
    n_frames: int

    def __len__(self) -> int:
        return len(self.start)

    def __iter__(self) -> Iterator[ChirpDescriptor]:
        for f, m, i, t in zip(self.frame, self.slow, self.tx, self.start):
            yield ChirpDescriptor(int(f), int(m), int(i), float(t))

    @property
    def global_slow(self) -> np.ndarray:
        return self.frame * slow_time_count(self.params) + self.slow

    @property
    def slow_per_frame(self) -> int:
        return slow_time_count(self.params)

    def start_times(self) -> np.ndarray:
        """Chirp starts arranged as ``(n_tx, n_frames * slow_per_frame)``."""
        out = np.empty((self.params.n_tx, self.n_frames * self.slow_per_frame))
        out[self.tx, self.global_slow] = self.start
        return out


def build_schedule(p: RadarWaveformParams, n_frames: int) -> TdmSchedule:
    """Enumerate the chirps of ``n_frames`` consecutive frames.

    Chirp ``k`` of frame ``F`` starts at ``F*t_frame + k*t_rep`` (evaluated
    directly, never accumulated) and uses transmitter ``k mod n_tx``.
    """
    if n_frames < 1:
        raise ConfigurationError(f"n_frames must be >= 1, got {n_frames}")
    k = np.tile(np.arange(p.n_chirps), n_frames)
    frame = np.repeat(np.arange(n_frames), p.n_chirps)
    start = frame * p.t_frame + k * p.t_rep
    return TdmSchedule(
        frame=frame,
        slow=k // p.n_tx,
        tx=k % p.n_tx,
        start=start,
        params=p,
        n_frames=n_frames,
    )
