"""Binary cube/image files, JSON sidecars, and CSV exports.

Binary layout (little-endian)::

    b"SARB1" | uint8 dtype code | uint8 ndim | ndim x uint64 dims | payload

Dtype code 1 is complex data stored as interleaved float32 (re, im) in
row-major order. The sidecar ``<file>.json`` carries the physics metadata.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .backprojection import ImageGrid, SarImage
from .echo_sim import BasebandCube
from .geometry import ChannelPositions
from .metrology import METRICS_COLUMNS, ProfileCut
from .range_compression import RangeProfileSet
from .waveform import RadarWaveformParams

MAGIC = b"SARB1"
DTYPE_COMPLEX64 = 1
_PAYLOAD = {DTYPE_COMPLEX64: np.dtype("<f4")}


class FormatError(ValueError):
    pass


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_array(path, data: np.ndarray) -> None:
    """Write a complex array as interleaved float32 (values are cast)."""
    data = np.ascontiguousarray(data, dtype=np.complex64)
    header = MAGIC + struct.pack("<BB", DTYPE_COMPLEX64, data.ndim)
    header += struct.pack(f"<{data.ndim}Q", *data.shape)
    payload = data.view(np.float32).astype("<f4", copy=False)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes(order="C"))


def read_array(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:5] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:5]!r}")
    if len(raw) < 7:
        raise FormatError(f"{path}: truncated header")
    code, ndim = struct.unpack_from("<BB", raw, 5)
    if code not in _PAYLOAD:
        raise FormatError(f"{path}: unknown dtype code {code}")
    offset = 7 + 8 * ndim
    if len(raw) < offset:
        raise FormatError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{ndim}Q", raw, 7)
    count = 2 * int(np.prod(dims, dtype=np.int64))
    if len(raw) != offset + count * _PAYLOAD[code].itemsize:
        raise FormatError(f"{path}: payload size does not match header dims {dims}")
    flat = np.frombuffer(raw, dtype=_PAYLOAD[code], count=count, offset=offset)
    return flat.astype(np.float32).view(np.complex64).reshape(dims)


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _positions_to_dict(pos: ChannelPositions) -> dict:
    return {
        "sampling": pos.sampling,
        "tx": pos.tx.tolist(),
        "rx": pos.rx.tolist(),
        "platform": pos.platform.tolist(),
        "times": pos.times.tolist(),
    }


def _positions_from_dict(d: dict) -> ChannelPositions:
    return ChannelPositions(
        tx=np.asarray(d["tx"], float),
        rx=np.asarray(d["rx"], float),
        platform=np.asarray(d["platform"], float),
        times=np.asarray(d["times"], float),
        sampling=d["sampling"],
    )


def write_cube(path, cube: BasebandCube, meta: Mapping | None = None) -> None:
    write_array(path, cube.data)
    _write_json(sidecar_path(path), {
        "kind": "baseband_cube",
        "dims": list(cube.data.shape),
        "index_order": ["tx", "rx", "slow", "fast"],
        "n_frames": cube.n_frames,
        "waveform": cube.params.to_dict(),
        "positions": _positions_to_dict(cube.positions),
        "meta": dict(meta or {}),
    })


def read_cube(path) -> tuple[BasebandCube, dict]:
    side = json.loads(sidecar_path(path).read_text())
    if side.get("kind") != "baseband_cube":
        raise FormatError(f"{path}: sidecar is not a baseband cube")
    data = read_array(path)
    if list(data.shape) != side["dims"]:
        raise FormatError(f"{path}: dims {data.shape} disagree with sidecar {side['dims']}")
    cube = BasebandCube(
        data=data,
        params=RadarWaveformParams.from_dict(side["waveform"]),
        positions=_positions_from_dict(side["positions"]),
        n_frames=side["n_frames"],
    )
    return cube, side.get("meta", {})


def image_metadata(image: SarImage) -> dict:
    return {
        "grid": image.grid.to_dict(),
        "aperture_length_m": image.aperture_length,
        "closest_range_m": image.closest_range,
        "wavelength_m": image.wavelength,
        "n_frames": image.n_frames,
        "n_channels": image.n_channels,
        "n_terms": image.n_terms,
        "meta": image.meta,
    }


def write_image(path, image: SarImage) -> None:
    write_array(path, image.values)
    _write_json(sidecar_path(path), {"kind": "sar_image", "dims": list(image.values.shape),
                                     **image_metadata(image)})


def read_image(path) -> SarImage:
    side = json.loads(sidecar_path(path).read_text())
    if side.get("kind") != "sar_image":
        raise FormatError(f"{path}: sidecar is not a SAR image")
    values = read_array(path)
    return SarImage(
        values=values,
        grid=ImageGrid.from_dict(side["grid"]),
        aperture_length=side["aperture_length_m"],
        closest_range=side["closest_range_m"],
        wavelength=side["wavelength_m"],
        n_frames=side["n_frames"],
        n_channels=side["n_channels"],
        n_terms=side["n_terms"],
        meta=side.get("meta", {}),
    )


def quantized(image: SarImage) -> SarImage:
    """The image as it is persisted: complex values rounded to float32 pairs."""
    from dataclasses import replace

    return replace(image, values=np.asarray(image.values, dtype=np.complex64))


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def write_csv(path, columns: Iterable[str], rows: Iterable[Mapping]) -> None:
    columns = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(row.get(c)) for c in columns])


def write_metrics_csv(path, rows: Iterable[Mapping]) -> None:
    write_csv(path, METRICS_COLUMNS, rows)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_profile_csv(path, profile: ProfileCut) -> None:
    write_csv(path, ("position_m", "magnitude_db"),
              ({"position_m": x, "magnitude_db": y}
               for x, y in zip(profile.positions, profile.magnitude_db)))


def write_range_profile_csv(path, profiles: RangeProfileSet, index=(0, 0, 0)) -> None:
    """One range line: one-way range, magnitude relative to its peak, phase."""
    line = profiles.data[tuple(index)]
    mag = np.abs(line)
    with np.errstate(divide="ignore"):
        db = 20 * np.log10(mag / mag.max()) if mag.max() > 0 else np.full(mag.shape, -np.inf)
    write_csv(path, ("range_m", "magnitude_db", "phase_rad"),
              ({"range_m": r, "magnitude_db": m, "phase_rad": ph}
               for r, m, ph in zip(profiles.range_axis / 2, db, np.angle(line))))


def write_image_db_csv(path, image: SarImage) -> None:
    """Magnitude in dB relative to the image peak; rows follow the grid y axis."""
    mag = np.abs(image.values).astype(float)
    peak = mag.max()
    with np.errstate(divide="ignore"):
        db = 20 * np.log10(mag / peak) if peak > 0 else np.full(mag.shape, -np.inf)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in db:
            w.writerow([format_value(v) for v in row])
