"""Point-target baseband synthesis and additive receiver noise."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateGeometryError
from .geometry import ChannelPositions
from .waveform import (
    RadarWaveformParams,
    chirp_slope,
    fast_time_count,
    max_two_way_range,
)


@dataclass(frozen=True)
class PointTarget:
    position: np.ndarray
    amplitude: complex = 1.0

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(-1)
        if pos.shape != (3,) or not np.all(np.isfinite(pos)):
            raise ValueError(f"target position must be a finite 3-vector, got {self.position!r}")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "amplitude", complex(self.amplitude))


@dataclass(frozen=True)
class BasebandCube:
    """Complex baseband samples ``data[tx, rx, slow, fast]``.

    ``slow`` runs over all frames of the recording, ``n_frames`` blocks of
    ``n_chirps / n_tx`` samples each.
    """

    data: np.ndarray
    params: RadarWaveformParams
    positions: ChannelPositions
    n_frames: int

    @property
    def shape(self):
        return self.data.shape

    @property
    def slow_per_frame(self) -> int:
        return self.data.shape[2] // self.n_frames

    def frames(self, first: int, count: int) -> slice:
        """Slow-time slice covering ``count`` frames starting at ``first``."""
        s = self.slow_per_frame
        return slice(first * s, (first + count) * s)


def two_way_range(tx: np.ndarray, rx: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Bistatic range ``|tx - point| + |rx - point|`` with broadcasting."""
    return np.linalg.norm(tx - point, axis=-1) + np.linalg.norm(rx - point, axis=-1)


def simulate_baseband(
    targets: Sequence[PointTarget],
    positions: ChannelPositions,
    p: RadarWaveformParams,
    *,
    n_frames: Optional[int] = None,
    range_taper: Optional[float] = None,
) -> BasebandCube:
    """Synthesize the dechirped baseband cube for a set of point targets.

    Each target contributes ``A * exp(j*2*pi/c * (f_start + slope*n/f_s) * r)``
    where ``r`` is the two-way transmitter-target-receiver range. With
    chirp-start positions ``r`` is constant within a chirp (stop-and-go);
    per-sample positions evaluate it at every fast-time sample.

    Parameters
    ----------
    range_taper : float, optional
        Reference range ``R0``; scales amplitudes by ``(R0 / R)**2`` with
        ``R`` the mean one-way range. Off by default.

    Raises
    ------
    DegenerateGeometryError
        If a target coincides with a phase center or its beat frequency
        falls outside the complex sampling bandwidth.
    """
    n_fast = fast_time_count(p)
    n_t, n_r = positions.rx.shape[:2]
    m = positions.n_slow
    if (n_t, n_r) != (p.n_tx, p.n_rx):
        raise ValueError("positions do not match the waveform channel counts")
    if n_frames is None:
        n_frames = max(1, m // (p.n_chirps // p.n_tx))

    nf = np.arange(n_fast) / p.f_sample
    k_fast = 2 * np.pi / p.c * (p.f_start + chirp_slope(p) * nf)
    data = np.zeros((n_t, n_r, m, n_fast), dtype=np.complex128)
    r_max = max_two_way_range(p)

    tx = positions.tx[:, None]  # broadcast against the rx axis
    rx = positions.rx

    for tgt in targets:
        if tgt.amplitude == 0:
            continue
        d_tx = np.linalg.norm(tx - tgt.position, axis=-1)
        d_rx = np.linalg.norm(rx - tgt.position, axis=-1)
        if min(d_tx.min(), d_rx.min()) <= 1e-9:
            raise DegenerateGeometryError(
                f"target at {tgt.position.tolist()} coincides with a phase center"
            )
        r = d_tx + d_rx
        if r.max() >= r_max:
            raise DegenerateGeometryError(
                f"target two-way range {r.max():.3f} m exceeds the {r_max:.3f} m range gate"
            )
        amp = np.full(r.shape[:3], tgt.amplitude, dtype=np.complex128)
        if range_taper is not None:
            r_one = r if r.ndim == 3 else r[..., 0]
            amp = amp * (range_taper / (r_one / 2)) ** 2
        if positions.per_sample:
            phase = k_fast * r
        else:
            phase = r[..., None] * k_fast
        data += amp[..., None] * np.exp(1j * phase)

    return BasebandCube(data=data, params=p, positions=positions, n_frames=n_frames)


def add_noise(cube: BasebandCube, noise_power: float, seed: int) -> BasebandCube:
    """Add circular complex white Gaussian noise of variance ``noise_power``.

    ``noise_power`` is per complex sample (linear). Zero power returns the
    cube with its samples untouched.
    """
    if noise_power < 0:
        raise ValueError(f"noise_power must be >= 0, got {noise_power}")
    if noise_power == 0:
        return cube
    rng = np.random.default_rng(seed)
    scale = np.sqrt(noise_power / 2)
    noise = rng.standard_normal(cube.data.shape + (2,))
    noisy = cube.data + scale * (noise[..., 0] + 1j * noise[..., 1])
    return replace(cube, data=noisy.astype(np.result_type(cube.data, np.complex64)))
