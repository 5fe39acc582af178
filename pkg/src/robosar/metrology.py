"""Image-quality measurements: profile cuts, half-power width, peak sidelobe
level, SNR, and integration gain."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .backprojection import SarImage, form_image, predicted_cross_range_resolution
from .errors import MainLobeUnresolved, NoSidelobeError
from .geometry import ChannelPositions, aperture_length
from .range_compression import RangeProfileSet
from .waveform import slow_time_count

log = logging.getLogger(__name__)

HALF_POWER_DB = -10 * math.log10(2)  # -3.0103 dB

METRICS_COLUMNS = (
    "scenario_id",
    "L_a_m",
    "R0_m",
    "v_ego_mps",
    "width_m",
    "predicted_width_m",
    "psl_db",
    "snr_db",
    "n_frames",
    "alpha",
)


@dataclass(frozen=True)
class ProfileCut:
    """Peak-normalized magnitude (dB) along one grid axis."""

    positions: np.ndarray
    magnitude_db: np.ndarray
    axis: str = "cross_range"

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        mag = np.asarray(self.magnitude_db, dtype=float)
        if pos.shape != mag.shape or pos.ndim != 1:
            raise ValueError("positions and magnitude must be 1-D arrays of equal length")
        if pos.size > 1 and np.any(np.diff(pos) <= 0):
            raise ValueError("profile positions must be strictly increasing")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "magnitude_db", mag)

    @classmethod
    def from_magnitude(cls, positions, magnitude, axis="cross_range") -> "ProfileCut":
        mag = np.abs(np.asarray(magnitude))
        peak = mag.max() if mag.size else 0.0
        if not np.isfinite(peak) or peak <= 0:
            raise ValueError("profile has no finite positive peak")
        with np.errstate(divide="ignore"):
            db = 20 * np.log10(mag / peak)
        return cls(positions, db, axis)

    @property
    def peak_index(self) -> int:
        return int(np.argmax(self.magnitude_db))

    @property
    def peak_position(self) -> float:
        return float(self.positions[self.peak_index])


@dataclass(frozen=True)
class HalfPowerCrossings:
    left: float
    right: float
    suspect: bool

    @property
    def width(self) -> float:
        return self.right - self.left


@dataclass(frozen=True)
class GainCurve:
    n_frames: np.ndarray
    gain_db: np.ndarray
    alpha: float
    snr_db: Optional[np.ndarray] = None

    def coherent_line(self) -> np.ndarray:
        return 10 * np.log10(self.n_frames)


def _peak_cell(values: np.ndarray) -> tuple[int, int]:
    mag = np.abs(values)
    if mag.size == 0 or not np.all(np.isfinite(mag)):
        raise ValueError("image contains non-finite values")
    peak = mag.max()
    if peak <= 0 or peak == mag.min():
        raise ValueError("image is flat; no peak to measure")
    return np.unravel_index(int(np.argmax(mag)), mag.shape)


def extract_profile(image: SarImage, axis: str = "cross_range") -> ProfileCut:
    """1-D cut through the global peak along a grid axis, normalized to 0 dB.

    Positions are measured from the grid center along ``x_axis`` (cross
    range) or ``y_axis`` (range).
    """
    iy, ix = _peak_cell(image.values)
    ny, nx = image.values.shape
    if axis == "cross_range":
        pos = image.grid.x_coords - (nx - 1) * image.grid.spacing[0] / 2
        cut = image.values[iy, :]
    elif axis == "range":
        pos = image.grid.y_coords - (ny - 1) * image.grid.spacing[1] / 2
        cut = image.values[:, ix]
    else:
        raise ValueError(f"axis must be 'cross_range' or 'range', got {axis!r}")
    return ProfileCut.from_magnitude(pos, cut, axis)


def range_profile_cut(profiles: RangeProfileSet, index=(0, 0, 0)) -> ProfileCut:
    """Profile of one (tx, rx, slow) range line against one-way range."""
    line = profiles.data[tuple(index)]
    return ProfileCut.from_magnitude(profiles.range_axis / 2, line, axis="range")


def _crossing(x0, x1, y0, y1, level):
    # linear interpolation in the dB domain
    if y1 == y0:
        return x0
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def halfpower_crossings(profile: ProfileCut, level_db: float = HALF_POWER_DB) -> HalfPowerCrossings:
    """Locate the half-power points bracketing the peak.

    The result is flagged ``suspect`` when the half-power extent contains
    more than one local maximum separated by a dip (a split main lobe).
    """
    x, y = profile.positions, profile.magnitude_db
    if x.size < 3:
        raise MainLobeUnresolved("main lobe unresolved at grid extent: fewer than 3 samples")
    k = profile.peak_index
    lo = k
    while lo > 0 and y[lo - 1] > level_db:
        lo -= 1
    hi = k
    while hi < len(y) - 1 and y[hi + 1] > level_db:
        hi += 1
    if lo == 0 or hi == len(y) - 1:
        raise MainLobeUnresolved()
    left = _crossing(x[lo - 1], x[lo], y[lo - 1], y[lo], level_db)
    right = _crossing(x[hi], x[hi + 1], y[hi], y[hi + 1], level_db)
    seg = y[lo : hi + 1]
    n_max = 0
    if seg.size >= 3:
        inner = seg[1:-1]
        n_max = int(np.sum((inner > seg[:-2]) & (inner >= seg[2:])))
    suspect = n_max > 1
    if suspect:
        log.warning("split main lobe: %d maxima above half power", n_max)
    return HalfPowerCrossings(float(left), float(right), suspect)


def halfpower_width(profile: ProfileCut) -> float:
    """Distance between the -3.0103 dB crossings nearest the peak."""
    return halfpower_crossings(profile).width


def main_lobe_bounds(profile: ProfileCut) -> tuple[int, int]:
    """Indices of the first local minima flanking the peak."""
    y = profile.magnitude_db
    k = profile.peak_index
    lo = k
    while lo > 0 and y[lo - 1] <= y[lo]:
        lo -= 1
    hi = k
    while hi < len(y) - 1 and y[hi + 1] <= y[hi]:
        hi += 1
    return lo, hi


def sidelobe_peaks(profile: ProfileCut) -> list[int]:
    """Indices of local maxima outside the main lobe."""
    y = profile.magnitude_db
    lo, hi = main_lobe_bounds(profile)
    out = []
    for n in range(1, len(y) - 1):
        if (n < lo or n > hi) and y[n] > y[n - 1] and y[n] >= y[n + 1]:
            out.append(n)
    return out


def peak_sidelobe_level(profile: ProfileCut) -> float:
    """Highest sidelobe relative to the peak (dB)."""
    peaks = sidelobe_peaks(profile)
    if not peaks:
        raise NoSidelobeError("no sidelobe outside the main lobe")
    return float(max(profile.magnitude_db[n] for n in peaks))


@dataclass(frozen=True)
class GridRect:
    """Index rectangle ``[iy0, iy1) x [ix0, ix1)`` on an image grid, or a mask."""

    iy0: int = 0
    iy1: Optional[int] = None
    ix0: int = 0
    ix1: Optional[int] = None

    def mask(self, shape) -> np.ndarray:
        m = np.zeros(shape, dtype=bool)
        m[self.iy0 : self.iy1, self.ix0 : self.ix1] = True
        return m


def default_noise_mask(image: SarImage, cells: float = 10.0) -> np.ndarray:
    """Grid cells more than ``cells`` predicted resolution cells from the peak.

    Distance is measured in units of the predicted half-power cross-range
    width (x) and range width (y).
    """
    iy, ix = _peak_cell(image.values)
    range_resolution = image.meta.get("range_resolution")
    if range_resolution is None:
        raise ValueError("image metadata lacks 'range_resolution'")
    if image.aperture_length > 0:
        cross = predicted_cross_range_resolution(
            image.wavelength, image.aperture_length, image.closest_range
        )
    else:
        cross = math.inf
    dx = (np.arange(image.values.shape[1]) - ix) * image.grid.spacing[0]
    dy = (np.arange(image.values.shape[0]) - iy) * image.grid.spacing[1]
    d2 = (dx[None, :] / cross) ** 2 + (dy[:, None] / range_resolution) ** 2
    return d2 > cells**2


def range_band_noise_mask(image: SarImage, min_offset: float) -> np.ndarray:
    """Grid rows at least ``min_offset`` meters in range from the peak row.

    Range sidelobes of a windowed chirp fall off far faster than the
    cross-range sidelobes of a short aperture, so these rows hold noise
    only, whatever the aperture length.
    """
    iy, _ = _peak_cell(image.values)
    dy = np.abs(np.arange(image.values.shape[0]) - iy) * image.grid.spacing[1]
    return np.broadcast_to((dy >= min_offset)[:, None], image.values.shape).copy()


def snr_components(image: SarImage, noise_region=None, guard: int = 2) -> tuple[float, float]:
    """Peak power and mean noise power (linear) behind :func:`measure_snr`."""
    iy, ix = _peak_cell(image.values)
    if noise_region is None:
        mask = default_noise_mask(image)
    elif isinstance(noise_region, GridRect):
        mask = noise_region.mask(image.values.shape)
    else:
        mask = np.asarray(noise_region, dtype=bool)
    if mask[max(iy - guard, 0) : iy + guard + 1, max(ix - guard, 0) : ix + guard + 1].any():
        raise ValueError("noise region overlaps the peak neighborhood")
    if not mask.any():
        raise ValueError("noise region is empty")
    peak = float(np.abs(image.values[iy, ix]) ** 2)
    noise = float(np.mean(np.abs(image.values[mask]) ** 2))
    return peak, noise


def measure_snr(image: SarImage, noise_region=None, guard: int = 2) -> float:
    """Peak-to-mean-noise power ratio in dB.

    ``noise_region`` is a :class:`GridRect` or boolean mask; by default the
    cells beyond ten predicted resolution cells. Returns ``inf`` for a
    noiseless image (zero noise floor).
    """
    peak, noise = snr_components(image, noise_region, guard)
    if noise == 0:
        log.warning("zero noise floor; SNR is infinite")
        return math.inf
    return 10 * math.log10(peak / noise)


def fit_integration_exponent(n_frames, gain_db) -> float:
    """Least-squares ``alpha`` in ``gain_db = 10*alpha*log10(N)`` (through the origin)."""
    x = 10 * np.log10(np.asarray(n_frames, dtype=float))
    g = np.asarray(gain_db, dtype=float)
    denom = float(x @ x)
    if denom == 0:
        return math.nan
    return float(x @ g / denom)


def cumulative_frame_images(
    profiles: RangeProfileSet,
    positions: ChannelPositions,
    grid,
    frame_counts: Sequence[int],
    interpolation: str = "linear",
    reference=None,
) -> list[SarImage]:
    """Images of the first ``N`` frames for each ``N`` in ``frame_counts``.

    Built incrementally: the image of ``N2`` frames is the image of ``N1``
    frames plus that of frames ``N1..N2-1``.
    """
    counts = [int(n) for n in frame_counts]
    if not counts or counts[0] < 1 or any(b <= a for a, b in zip(counts, counts[1:])):
        raise ValueError("frame_counts must be strictly increasing and start at >= 1")
    spf = slow_time_count(profiles.params)
    if counts[-1] * spf > profiles.data.shape[2]:
        raise ValueError(f"recording has fewer than {counts[-1]} frames")
    out = []
    acc = None
    prev = 0
    for n in counts:
        part = form_image(profiles, positions, grid, interpolation,
                          slow=np.arange(prev * spf, n * spf), reference=reference)
        if acc is None:
            acc = part
        else:
            acc = replace(
                acc + part,
                aperture_length=aperture_length(positions.select(np.arange(n * spf))),
            )
        out.append(acc)
        prev = n
    return out


def gain_curve_from_snr(snr_db: Sequence[float], frame_counts: Sequence[int]) -> GainCurve:
    """Gain relative to the single-frame SNR, with the fitted exponent."""
    n = np.asarray(frame_counts, dtype=float)
    snr = np.asarray(snr_db, dtype=float)
    if n.size == 0 or n[0] != 1:
        raise ValueError("frame_counts must start at 1")
    gain = snr - snr[0]
    return GainCurve(n_frames=n, gain_db=gain, alpha=fit_integration_exponent(n, gain), snr_db=snr)


def integration_gain_curve(
    profiles: RangeProfileSet,
    positions: ChannelPositions,
    grid,
    frame_counts: Sequence[int],
    *,
    interpolation: str = "linear",
    noise_region=None,
    reference=None,
) -> GainCurve:
    """SNR gain of growing apertures anchored at the first frame.

    For each ``N`` the image of frames ``0..N-1`` is formed and its SNR
    measured; the gain is ``SNR(N) - SNR(1)`` and ``alpha`` is the
    least-squares fit of ``gain = 10*alpha*log10(N)``.
    """
    images = cumulative_frame_images(profiles, positions, grid, frame_counts,
                                     interpolation, reference)
    snr = [measure_snr(img, noise_region) for img in images]
    return gain_curve_from_snr(snr, frame_counts)
