"""Platform trajectories, antenna layout, and channel phase-center positions.

All positions are expressed in the common navigation frame ``n``. A sensor
offset is taken to frame ``n`` by the rigid composition

    p = platform(t) + R_nb @ (mount.translation + mount.rotation @ offset)

and the vibration displacement is added to the sensor after mounting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .waveform import (
    RadarWaveformParams,
    TdmSchedule,
    center_wavelength,
    fast_time_count,
)

_EYE3 = np.eye(3)


def _as_vec3(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise ConfigurationError(f"{name} must be a finite 3-vector, got {v!r}")
    return a


def _check_rotation(r, name: str, tol: float = 1e-9) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ConfigurationError(f"{name} must be 3x3")
    if not np.allclose(r @ r.T, _EYE3, atol=tol, rtol=0) or abs(np.linalg.det(r) - 1) > tol:
        raise ConfigurationError(f"{name} is not a proper rotation matrix")
    return r


@dataclass(frozen=True)
class AntennaArray:
    """Transmit and receive phase-center offsets in the sensor frame (m)."""

    tx_offsets: np.ndarray
    rx_offsets: np.ndarray

    def __post_init__(self):
        tx = np.atleast_2d(np.asarray(self.tx_offsets, dtype=float))
        rx = np.atleast_2d(np.asarray(self.rx_offsets, dtype=float))
        for name, a in (("tx_offsets", tx), ("rx_offsets", rx)):
            if a.ndim != 2 or a.shape[1] != 3 or len(a) == 0:
                raise ConfigurationError(f"{name} must be a non-empty list of 3-vectors")
            if not np.all(np.isfinite(a)):
                raise ConfigurationError(f"{name} must be finite")
        object.__setattr__(self, "tx_offsets", tx)
        object.__setattr__(self, "rx_offsets", rx)

    @property
    def n_tx(self) -> int:
        return len(self.tx_offsets)

    @property
    def n_rx(self) -> int:
        return len(self.rx_offsets)

    def check(self, p: RadarWaveformParams) -> None:
        if (self.n_tx, self.n_rx) != (p.n_tx, p.n_rx):
            raise ConfigurationError(
                f"array has {self.n_tx} tx / {self.n_rx} rx, waveform expects "
                f"{p.n_tx} / {p.n_rx}"
            )

    @classmethod
    def default(cls, p: RadarWaveformParams) -> "AntennaArray":
        """Uniform layout along sensor x: rx at lambda/2, tx at 2*lambda, centered."""
        lam = center_wavelength(p)
        tx = np.zeros((p.n_tx, 3))
        rx = np.zeros((p.n_rx, 3))
        tx[:, 0] = 2 * lam * np.arange(p.n_tx)
        rx[:, 0] = 0.5 * lam * np.arange(p.n_rx)
        tx[:, 0] -= tx[:, 0].mean()
        rx[:, 0] -= rx[:, 0].mean()
        return cls(tx, rx)

    @classmethod
    def colocated(cls, p: RadarWaveformParams) -> "AntennaArray":
        return cls(np.zeros((p.n_tx, 3)), np.zeros((p.n_rx, 3)))


@dataclass(frozen=True)
class MountingTransform:
    """Sensor-to-body rigid transform."""

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "translation", _as_vec3(self.translation, "translation"))
        object.__setattr__(self, "rotation", _check_rotation(self.rotation, "mount rotation"))

    def apply(self, offsets: np.ndarray) -> np.ndarray:
        """Map sensor-frame points (..., 3) into the body frame."""
        return offsets @ self.rotation.T + self.translation


@dataclass(frozen=True)
class VibrationSpec:
    """Sinusoidal sensor displacement ``amplitude * sin(2*pi*frequency*t + phase)``.

    ``direction`` is given in the sensor frame; the default is the sensor
    boresight (+y).
    """

    frequency: float
    amplitude: float
    direction: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    phase: float = 0.0

    def __post_init__(self):
        d = _as_vec3(self.direction, "vibration direction")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ConfigurationError("vibration direction must have unit norm")
        if self.amplitude < 0:
            raise ConfigurationError("vibration amplitude must be >= 0")
        object.__setattr__(self, "direction", d)

    def displacement(self, t) -> np.ndarray:
        """Scalar displacement along ``direction`` at times ``t``."""
        return self.amplitude * np.sin(2 * np.pi * self.frequency * np.asarray(t) + self.phase)


@dataclass(frozen=True)
class DriftSpec:
    """Gaussian random-walk navigation error.

    Position and attitude errors start at zero and accumulate independent
    increments on a knot grid of spacing ``knot_interval``; values between
    knots are linearly interpolated. The random stream is drawn knot by knot
    from ``seed``, so a longer query reproduces every earlier knot.
    """

    position_sigma: np.ndarray = field(default_factory=lambda: np.zeros(3))  # m/sqrt(s)
    angle_sigma: np.ndarray = field(default_factory=lambda: np.zeros(3))  # rad/sqrt(s)
    seed: int = 0
    knot_interval: float = 200e-6

    def __post_init__(self):
        ps = np.broadcast_to(np.asarray(self.position_sigma, dtype=float), (3,)).copy()
        asg = np.broadcast_to(np.asarray(self.angle_sigma, dtype=float), (3,)).copy()
        if np.any(ps < 0) or np.any(asg < 0):
            raise ConfigurationError("drift deviations must be non-negative")
        if not self.knot_interval > 0:
            raise ConfigurationError("knot_interval must be positive")
        object.__setattr__(self, "position_sigma", ps)
        object.__setattr__(self, "angle_sigma", asg)

    def evaluate(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Position error (..., 3) and small-angle attitude error (..., 3) at ``t``."""
        t = np.asarray(t, dtype=float)
        if t.size == 0:
            return np.zeros(t.shape + (3,)), np.zeros(t.shape + (3,))
        n_knots = int(np.ceil(max(float(t.max()), 0.0) / self.knot_interval)) + 2
        rng = np.random.default_rng(self.seed)
        steps = rng.standard_normal((n_knots - 1, 6)) * np.sqrt(self.knot_interval)
        steps *= np.concatenate([self.position_sigma, self.angle_sigma])
        walk = np.vstack([np.zeros((1, 6)), np.cumsum(steps, axis=0)])
        u = t / self.knot_interval
        k = np.clip(np.floor(u).astype(int), 0, n_knots - 2)
        w = (u - k)[..., None]
        val = walk[k] * (1 - w) + walk[k + 1] * w
        return val[..., :3], val[..., 3:]


def _rotvec_to_matrix(rv: np.ndarray) -> np.ndarray:
    """Rodrigues formula, vectorized over leading axes."""
    theta = np.linalg.norm(rv, axis=-1)[..., None, None]
    k = np.zeros(rv.shape[:-1] + (3, 3))
    k[..., 0, 1], k[..., 0, 2] = -rv[..., 2], rv[..., 1]
    k[..., 1, 0], k[..., 1, 2] = rv[..., 2], -rv[..., 0]
    k[..., 2, 0], k[..., 2, 1] = -rv[..., 1], rv[..., 0]
    small = theta < 1e-12
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0, np.sin(safe) / safe)
    b = np.where(small, 0.5, (1 - np.cos(safe)) / safe**2)
    return _EYE3 + a * k + b * (k @ k)


@dataclass(frozen=True)
class Trajectory:
    """Straight constant-velocity pass with optional vibration and drift."""

    start: np.ndarray
    velocity: np.ndarray
    vibration: Optional[VibrationSpec] = None
    drift: Optional[DriftSpec] = None
    orientation: np.ndarray = field(default_factory=lambda: np.eye(3))  # body -> n

    def __post_init__(self):
        object.__setattr__(self, "start", _as_vec3(self.start, "start"))
        object.__setattr__(self, "velocity", _as_vec3(self.velocity, "velocity"))
        object.__setattr__(
            self, "orientation", _check_rotation(self.orientation, "body orientation")
        )

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))

    def nominal(self) -> "Trajectory":
        """The trajectory as the platform estimates it: no vibration, no drift."""
        return Trajectory(self.start, self.velocity, None, None, self.orientation)

    def base_position(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.start + t[..., None] * self.velocity

    def vibration_offset(self, t, mount: Optional[MountingTransform] = None) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.vibration is None:
            return np.zeros(t.shape + (3,))
        d = self.vibration.direction
        if mount is not None:
            d = mount.rotation @ d
        d_n = self.orientation @ d
        return self.vibration.displacement(t)[..., None] * d_n


def platform_position(
    traj: Trajectory, t, mount: Optional[MountingTransform] = None
) -> np.ndarray:
    """Platform (sensor reference) position at time(s) ``t`` >= 0.

    Sum of base motion, vibration along its direction rotated into frame n,
    and accumulated drift.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("trajectory is defined for t >= 0 only")
    pos = traj.base_position(t) + traj.vibration_offset(t, mount)
    if traj.drift is not None:
        pos = pos + traj.drift.evaluate(t)[0]
    return pos


@dataclass(frozen=True)
class ChannelPositions:
    """Phase-center positions for every chirp of a recording.

    Shapes with ``M`` slow-time samples per transmitter over all frames:

    - ``tx``: ``(n_tx, M, 3)``, transmitter ``i`` during its chirp ``m``
    - ``rx``: ``(n_tx, n_rx, M, 3)``, receiver ``j`` during that same chirp
    - ``platform``: ``(n_tx, M, 3)``, base-motion position (no vibration/drift)
    - ``times``: ``(n_tx, M)``, chirp start times

    With ``sampling == "per_fast_time_sample"``, ``tx`` and ``rx`` carry an
    extra fast-time axis before the coordinate axis.
    """

    tx: np.ndarray
    rx: np.ndarray
    platform: np.ndarray
    times: np.ndarray
    sampling: str = "chirp_start"

    @property
    def n_slow(self) -> int:
        return self.times.shape[1]

    @property
    def per_sample(self) -> bool:
        return self.sampling == "per_fast_time_sample"

    def select(self, slow) -> "ChannelPositions":
        """Restrict to a subset of global slow-time indices."""
        return ChannelPositions(
            tx=self.tx[:, slow],
            rx=self.rx[:, :, slow],
            platform=self.platform[:, slow],
            times=self.times[:, slow],
            sampling=self.sampling,
        )

    def chirp_start_only(self) -> "ChannelPositions":
        if not self.per_sample:
            return self
        return ChannelPositions(
            self.tx[:, :, 0], self.rx[:, :, :, 0], self.platform, self.times, "chirp_start"
        )


def channel_positions(
    traj: Trajectory,
    mount: MountingTransform,
    array: AntennaArray,
    schedule: TdmSchedule,
    sampling: str = "chirp_start",
) -> ChannelPositions:
    """Tx/rx phase centers in frame n for every scheduled chirp."""
    p = schedule.params
    array.check(p)
    if sampling not in ("chirp_start", "per_fast_time_sample"):
        raise ConfigurationError(f"unknown sampling mode {sampling!r}")

    times = schedule.start_times()  # (n_tx, M)
    if sampling == "per_fast_time_sample":
        t = times[..., None] + np.arange(fast_time_count(p)) / p.f_sample
    else:
        t = times

    body_tx = mount.apply(array.tx_offsets)  # (n_tx, 3)
    body_rx = mount.apply(array.rx_offsets)  # (n_rx, 3)
    ref = traj.base_position(t) + traj.vibration_offset(t, mount)
    r_nb = traj.orientation
    if traj.drift is not None:
        dpos, dang = traj.drift.evaluate(t)
        ref = ref + dpos
        r_nb = _rotvec_to_matrix(dang) @ traj.orientation  # (..., 3, 3)
        # tx i only ever uses its own chirps: pick its body offset per row.
        off_tx = np.einsum("i...ab,ib->i...a", r_nb, body_tx)
        off_rx = np.einsum("i...ab,jb->ij...a", r_nb, body_rx)
    else:
        extra = (1,) * (t.ndim - 1)
        off_tx = (body_tx @ r_nb.T).reshape((p.n_tx,) + extra + (3,))
        off_rx = (body_rx @ r_nb.T).reshape((1, p.n_rx) + extra + (3,))
    tx = ref + off_tx
    rx = ref[:, None] + off_rx
    return ChannelPositions(
        tx=tx,
        rx=np.broadcast_to(rx, (p.n_tx, p.n_rx) + t.shape[1:] + (3,)).copy(),
        platform=traj.base_position(times),
        times=times,
        sampling=sampling,
    )


def synthetic_aperture_length(
    traj: Trajectory, schedule: TdmSchedule, frames_used: int
) -> float:
    """Base-motion distance between the first and last chirp of the first
    ``frames_used`` frames."""
    if frames_used < 1:
        raise ValueError("frames_used must be >= 1")
    p = schedule.params
    t_last = (frames_used - 1) * p.t_frame + (p.n_chirps - 1) * p.t_rep
    a, b = traj.base_position(np.array([0.0, t_last]))
    return float(np.linalg.norm(b - a))


def aperture_length(positions: ChannelPositions) -> float:
    """Base-motion distance between the earliest and latest chirp in ``positions``."""
    t = positions.times.reshape(-1)
    if t.size == 0:
        return 0.0
    plat = positions.platform.reshape(-1, 3)
    return float(np.linalg.norm(plat[np.argmax(t)] - plat[np.argmin(t)]))


def closest_approach_range(positions: ChannelPositions, point: Sequence[float]) -> float:
    """Minimum distance from the base-motion positions to ``point``."""
    d = np.linalg.norm(positions.platform.reshape(-1, 3) - np.asarray(point, float), axis=-1)
    return float(d.min())
