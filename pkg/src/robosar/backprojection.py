"""Time-domain backprojection onto a planar image grid."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from .errors import GridRangeError
from .geometry import ChannelPositions, aperture_length, closest_approach_range
from .range_compression import RangeProfileSet, predicted_range_resolution
from .waveform import center_wavelength, fast_time_count, slow_time_count

INTERPOLATION = {"nearest": 0, "linear": 1}


@dataclass(frozen=True)
class ImageGrid:
    """Rectangular grid ``origin + ix*dx*x_axis + iy*dy*y_axis``.

    ``origin`` is the grid point with ``ix = iy = 0``. Node counts are
    ``floor(extent / spacing) + 1`` per axis.
    """

    origin: np.ndarray
    x_axis: np.ndarray
    y_axis: np.ndarray
    extent: tuple[float, float]
    spacing: tuple[float, float]

    def __post_init__(self):
        o = np.asarray(self.origin, float).reshape(3)
        x = np.asarray(self.x_axis, float).reshape(3)
        y = np.asarray(self.y_axis, float).reshape(3)
        if abs(np.linalg.norm(x) - 1) > 1e-12 or abs(np.linalg.norm(y) - 1) > 1e-12:
            raise ValueError("grid basis vectors must be unit length")
        if abs(x @ y) > 1e-12:
            raise ValueError("grid basis vectors must be orthogonal")
        if min(self.spacing) <= 0 or min(self.extent) < 0:
            raise ValueError("grid spacing must be positive and extent non-negative")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "x_axis", x)
        object.__setattr__(self, "y_axis", y)
        object.__setattr__(self, "extent", tuple(float(e) for e in self.extent))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @classmethod
    def centered(cls, center, extent, spacing, x_axis=(1, 0, 0), y_axis=(0, 1, 0)):
        x = np.asarray(x_axis, float)
        y = np.asarray(y_axis, float)
        grid = cls(np.zeros(3), x, y, extent, spacing)
        half_x = (grid.shape[1] - 1) * grid.spacing[0] / 2
        half_y = (grid.shape[0] - 1) * grid.spacing[1] / 2
        origin = np.asarray(center, float) - half_x * x - half_y * y
        return cls(origin, x, y, extent, spacing)

    @property
    def shape(self) -> tuple[int, int]:
        """``(ny, nx)``: rows follow ``y_axis``, columns follow ``x_axis``."""
        # tolerate extents that are an exact multiple up to rounding
        nx = int(np.floor(self.extent[0] / self.spacing[0] + 1e-9)) + 1
        ny = int(np.floor(self.extent[1] / self.spacing[1] + 1e-9)) + 1
        return ny, nx

    @property
    def x_coords(self) -> np.ndarray:
        return np.arange(self.shape[1]) * self.spacing[0]

    @property
    def y_coords(self) -> np.ndarray:
        return np.arange(self.shape[0]) * self.spacing[1]

    @property
    def center(self) -> np.ndarray:
        ny, nx = self.shape
        return (
            self.origin
            + (nx - 1) * self.spacing[0] / 2 * self.x_axis
            + (ny - 1) * self.spacing[1] / 2 * self.y_axis
        )

    def points(self) -> np.ndarray:
        """Grid point coordinates, shape ``(ny, nx, 3)``."""
        xs, ys = self.x_coords, self.y_coords
        return (
            self.origin
            + xs[None, :, None] * self.x_axis
            + ys[:, None, None] * self.y_axis
        )

    def corners(self) -> np.ndarray:
        pts = self.points()
        return pts[[0, 0, -1, -1], [0, -1, 0, -1]]

    def translated(self, offset) -> "ImageGrid":
        return ImageGrid(self.origin + np.asarray(offset, float), self.x_axis,
                         self.y_axis, self.extent, self.spacing)

    def to_dict(self) -> dict:
        return {
            "origin": self.origin.tolist(),
            "x_axis": self.x_axis.tolist(),
            "y_axis": self.y_axis.tolist(),
            "extent": list(self.extent),
            "spacing": list(self.spacing),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImageGrid":
        return cls(d["origin"], d["x_axis"], d["y_axis"], tuple(d["extent"]), tuple(d["spacing"]))


@dataclass(frozen=True)
class SarImage:
    """Complex image ``values[iy, ix]`` with integration bookkeeping."""

    values: np.ndarray
    grid: ImageGrid
    aperture_length: float
    closest_range: float
    wavelength: float
    n_frames: int
    n_channels: int
    n_terms: int
    meta: dict = field(default_factory=dict)

    def __add__(self, other: "SarImage") -> "SarImage":
        """Sum of images formed from disjoint chirp sets on the same grid.

        The aperture length of the sum is taken as the sum of the parts,
        which misses any gap between them; callers that know the combined
        chirp set should overwrite it.
        """
        if self.values.shape != other.values.shape:
            raise ValueError("images are on different grids")
        return SarImage(
            values=self.values + other.values,
            grid=self.grid,
            aperture_length=self.aperture_length + other.aperture_length,
            closest_range=min(self.closest_range, other.closest_range),
            wavelength=self.wavelength,
            n_frames=self.n_frames + other.n_frames,
            n_channels=self.n_channels,
            n_terms=self.n_terms + other.n_terms,
            meta={**self.meta, **other.meta},
        )


def two_way_grid_range(tx, rx, q) -> np.ndarray:
    """``|tx - q| + |rx - q|`` with numpy broadcasting."""
    tx, rx, q = (np.asarray(a, float) for a in (tx, rx, q))
    return np.linalg.norm(tx - q, axis=-1) + np.linalg.norm(rx - q, axis=-1)


_TWO_PI = 2 * np.pi
_INV_TWO_PI = 1 / (2 * np.pi)


@numba.njit(cache=True, fastmath=True, inline="always")
def _cis(x):
    """cos(x), sin(x) by reduction to [-pi, pi] and Taylor series (|err| < 2e-12)."""
    y = x - _TWO_PI * np.floor(x * _INV_TWO_PI + 0.5)
    y2 = y * y
    c = 1.0 / 620448401733239439360000
    c = c * y2 - 1.0 / 1124000727777607680000
    c = c * y2 + 1.0 / 2432902008176640000
    c = c * y2 - 1.0 / 6402373705728000
    c = c * y2 + 1.0 / 20922789888000
    c = c * y2 - 1.0 / 87178291200
    c = c * y2 + 1.0 / 479001600
    c = c * y2 - 1.0 / 3628800
    c = c * y2 + 1.0 / 40320
    c = c * y2 - 1.0 / 720
    c = c * y2 + 1.0 / 24
    c = c * y2 - 0.5
    c = c * y2 + 1.0
    s = 1.0 / 15511210043330985984000000
    s = s * y2 - 1.0 / 25852016738884976640000
    s = s * y2 + 1.0 / 51090942171709440000
    s = s * y2 - 1.0 / 121645100408832000
    s = s * y2 + 1.0 / 355687428096000
    s = s * y2 - 1.0 / 1307674368000
    s = s * y2 + 1.0 / 6227020800
    s = s * y2 - 1.0 / 39916800
    s = s * y2 + 1.0 / 362880
    s = s * y2 - 1.0 / 5040
    s = s * y2 + 1.0 / 120
    s = s * y2 - 1.0 / 6
    s = (s * y2 + 1.0) * y
    return c, s


@numba.njit(cache=True, fastmath=True)
def _backproject(data, tx, rx, slow, pts, inv_dr, k0, theta, mode, out_re, out_im):
    # Linear mode interpolates the profile after removing the window's
    # linear phase (theta per bin); the residual phase -theta*frac is folded
    # into the matched-filter rotation.
    n_t, n_r = data.shape[0], data.shape[1]
    n_pts = pts.shape[0]
    px = pts[:, 0].copy()
    py = pts[:, 1].copy()
    pz = pts[:, 2].copy()
    kk = np.empty(n_pts, dtype=np.int64)
    ff = np.empty(n_pts)
    cc = np.empty(n_pts)
    ss = np.empty(n_pts)
    rot_re = np.cos(theta)
    rot_im = np.sin(theta)
    for i in range(n_t):
        for j in range(n_r):
            for mi in range(slow.shape[0]):
                m = slow[mi]
                row = data[i, j, m]
                tx0, tx1, tx2 = tx[i, m, 0], tx[i, m, 1], tx[i, m, 2]
                rx0, rx1, rx2 = rx[i, j, m, 0], rx[i, j, m, 1], rx[i, j, m, 2]
                # pass 1: geometry and phase, branch-free
                for g in range(n_pts):
                    r = np.sqrt((tx0 - px[g]) ** 2 + (tx1 - py[g]) ** 2 + (tx2 - pz[g]) ** 2) + np.sqrt(
                        (rx0 - px[g]) ** 2 + (rx1 - py[g]) ** 2 + (rx2 - pz[g]) ** 2
                    )
                    u = r * inv_dr
                    if mode == 1:
                        k = np.floor(u)
                        f = u - k
                        ph = k0 * r + theta * f
                    else:
                        k = np.floor(u + 0.5)
                        f = 0.0
                        ph = k0 * r
                    kk[g] = int(k)
                    ff[g] = f
                    cc[g], ss[g] = _cis(ph)
                # pass 2: profile lookup and accumulation of s * exp(-j*ph)
                if mode == 1:
                    for g in range(n_pts):
                        a = row[kk[g]]
                        b = row[kk[g] + 1]
                        f = ff[g]
                        b_re = b.real * rot_re - b.imag * rot_im
                        b_im = b.real * rot_im + b.imag * rot_re
                        s_re = a.real + f * (b_re - a.real)
                        s_im = a.imag + f * (b_im - a.imag)
                        out_re[g] += s_re * cc[g] + s_im * ss[g]
                        out_im[g] += s_im * cc[g] - s_re * ss[g]
                else:
                    for g in range(n_pts):
                        s = row[kk[g]]
                        out_re[g] += s.real * cc[g] + s.imag * ss[g]
                        out_im[g] += s.imag * cc[g] - s.real * ss[g]


def _check_ranges(profiles: RangeProfileSet, positions: ChannelPositions, slow, grid: ImageGrid):
    # Summed distance is convex in q, so its maximum over the planar grid
    # is attained at a corner.
    corners = grid.corners()
    tx = positions.tx[:, slow][:, :, None, :]
    rx = positions.rx[:, :, slow][:, :, :, None, :]
    r = (np.linalg.norm(tx[:, None] - corners, axis=-1)
         + np.linalg.norm(rx - corners, axis=-1))
    limit = profiles.max_range
    if r.max() >= limit:
        bad = corners[np.unravel_index(np.argmax(r), r.shape)[-1]]
        raise GridRangeError(
            f"grid corner {np.round(bad, 4).tolist()} reaches two-way range "
            f"{r.max():.4f} m beyond the profile axis limit {limit:.4f} m"
        )


def form_image(
    profiles: RangeProfileSet,
    positions: ChannelPositions,
    grid: ImageGrid,
    interpolation: str = "linear",
    slow: Optional[np.ndarray] = None,
    reference: Optional[np.ndarray] = None,
) -> SarImage:
    """Backproject range profiles onto ``grid``.

    For every grid point the profile of each (tx, rx, slow-time) term is
    interpolated at the two-way grid range, multiplied by the matched filter
    ``exp(-j*2*pi*f_start/c * r)`` and summed in the fixed order tx, rx,
    slow-time.

    Parameters
    ----------
    slow : array of int, optional
        Global slow-time indices to integrate; all by default.
    reference : 3-vector, optional
        Scene point for the closest-approach range; defaults to the grid center.
    """
    if interpolation not in INTERPOLATION:
        raise ValueError(f"interpolation must be one of {sorted(INTERPOLATION)}")
    p = profiles.params
    n_t, n_r, m_total = profiles.data.shape[:3]
    if positions.tx.shape[:2] != (n_t, m_total) or positions.rx.shape[:3] != (n_t, n_r, m_total):
        raise ValueError(
            f"profile dims {profiles.data.shape[:3]} do not match positions "
            f"{positions.rx.shape[:3]}"
        )
    positions = positions.chirp_start_only()
    n_fast = fast_time_count(p)
    slow = np.arange(m_total) if slow is None else np.asarray(slow, dtype=np.int64).reshape(-1)
    if slow.size and (slow.min() < 0 or slow.max() >= m_total):
        raise IndexError("slow-time selection out of bounds")

    if slow.size:
        _check_ranges(profiles, positions, slow, grid)
    pts = np.ascontiguousarray(grid.points().reshape(-1, 3))
    re = np.zeros(len(pts))
    im = np.zeros(len(pts))
    _backproject(
        np.ascontiguousarray(profiles.data, dtype=np.complex128),
        np.ascontiguousarray(positions.tx),
        np.ascontiguousarray(positions.rx),
        slow.astype(np.int64),
        pts,
        1.0 / profiles.bin_spacing,
        2 * np.pi * p.f_start / p.c,
        2 * np.pi * profiles.window.phase_center(n_fast) / profiles.n_bins,
        INTERPOLATION[interpolation],
        re,
        im,
    )
    sub = positions.select(slow)
    ref = grid.center if reference is None else np.asarray(reference, float)
    frames = np.unique(slow // slow_time_count(p)).size if slow.size else 0
    return SarImage(
        values=(re + 1j * im).reshape(grid.shape),
        grid=grid,
        aperture_length=aperture_length(sub),
        closest_range=closest_approach_range(sub, ref) if slow.size else float("nan"),
        wavelength=center_wavelength(p),
        n_frames=int(frames),
        n_channels=n_t * n_r,
        n_terms=int(n_t * n_r * slow.size),
        meta={"range_resolution": predicted_range_resolution(p, profiles.window)},
    )


def predicted_cross_range_resolution(
    wavelength: float, aperture: float, closest_range: float, half_power: bool = True
) -> float:
    """Peak-to-null cross-range resolution ``lambda*R0/(2*L_a)``; the half-power
    width when ``half_power`` (factor 0.88448, uniform aperture weighting)."""
    if aperture <= 0 or closest_range <= 0:
        raise ValueError("aperture length and closest-approach range must be positive")
    res = wavelength * closest_range / (2 * aperture)
    return 0.88448 * res if half_power else res


def slow_indices_for_aperture(
    positions: ChannelPositions, reference, length: float
) -> np.ndarray:
    """Slow-time indices whose along-track position lies within ``length/2``
    of the reference point's closest approach."""
    plat = positions.platform.mean(axis=0)  # (M, 3), averaged over tx slots
    if len(plat) < 2:
        return np.arange(len(plat))
    heading = plat[-1] - plat[0]
    norm = np.linalg.norm(heading)
    if norm == 0:
        raise ValueError("stationary platform has no synthetic aperture")
    heading /= norm
    s = (plat - np.asarray(reference, float)) @ heading
    return np.flatnonzero(np.abs(s) <= length / 2 + 1e-12)
