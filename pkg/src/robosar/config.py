"""Scenario configuration schema (YAML) and bundled scenarios."""

from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path
from typing import List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigurationError

Vec3 = List[float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class WaveformConfig(_Strict):
    f_start: float = 76e9
    bandwidth: float = 4e9
    t_chirp: float = 180e-6
    t_rep: float = 200e-6
    n_chirps: int = 256
    t_frame: float = 52e-3
    f_sample: float = 977e3
    n_tx: int = 4
    n_rx: int = 4
    c: float = 299_792_458.0


class ArrayConfig(_Strict):
    layout: Literal["default", "colocated", "custom"] = "default"
    tx_offsets: Optional[List[Vec3]] = None
    rx_offsets: Optional[List[Vec3]] = None

    @model_validator(mode="after")
    def _custom_needs_offsets(self):
        if self.layout == "custom" and (self.tx_offsets is None or self.rx_offsets is None):
            raise ValueError("custom layout requires tx_offsets and rx_offsets")
        if self.layout != "custom" and (self.tx_offsets or self.rx_offsets):
            raise ValueError("offsets are only accepted with layout: custom")
        return self


class MountConfig(_Strict):
    translation: Vec3 = Field(default_factory=lambda: [0.0, 0.0, 0.0])
    rotation: List[Vec3] = Field(default_factory=lambda: [[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])


class VibrationConfig(_Strict):
    frequency: float
    amplitude: float = Field(ge=0)
    direction: Vec3 = Field(default_factory=lambda: [0.0, 1.0, 0.0])
    phase: float = 0.0
    # recording_start: phase at t = 0; pass_point: phase when the base
    # motion passes the pass point (recording midpoint).
    phase_reference: Literal["recording_start", "pass_point"] = "recording_start"


class DriftConfig(_Strict):
    position_sigma: Vec3 = Field(default_factory=lambda: [0.0, 0.0, 0.0])
    angle_sigma: Vec3 = Field(default_factory=lambda: [0.0, 0.0, 0.0])
    seed: int = 0
    knot_interval: float = 200e-6


class TrajectoryConfig(_Strict):
    speed: float = Field(gt=0)
    heading: Vec3 = Field(default_factory=lambda: [1.0, 0.0, 0.0])
    pass_point: Vec3 = Field(default_factory=lambda: [0.0, 0.0, 0.0])
    orientation: List[Vec3] = Field(default_factory=lambda: [[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])
    vibration: Optional[VibrationConfig] = None
    drift: Optional[DriftConfig] = None


class RecordingConfig(_Strict):
    n_frames: Union[int, Literal["auto"]] = "auto"
    sampling: Literal["chirp_start", "per_fast_time_sample"] = "chirp_start"
    margin_frames: int = Field(default=1, ge=0)


class TargetConfig(_Strict):
    position: Vec3
    amplitude: Union[float, List[float]] = 1.0  # real, or [re, im]

    @field_validator("amplitude")
    @classmethod
    def _re_im(cls, v):
        if isinstance(v, list) and len(v) != 2:
            raise ValueError("complex amplitude must be [re, im]")
        return v

    @property
    def complex_amplitude(self) -> complex:
        a = self.amplitude
        return complex(a[0], a[1]) if isinstance(a, list) else complex(a)


class NoiseConfig(_Strict):
    power: Optional[float] = Field(default=None, ge=0)
    snr_db: Optional[float] = None  # per complex sample, relative to |A|^2 of the first target

    @model_validator(mode="after")
    def _one_of(self):
        if self.power is not None and self.snr_db is not None:
            raise ValueError("give either power or snr_db, not both")
        return self


class GridConfig(_Strict):
    center: Union[Literal["target"], Vec3] = "target"
    extent: List[float] = Field(default_factory=lambda: [0.4, 0.4], min_length=2, max_length=2)
    spacing: List[float] = Field(default_factory=lambda: [0.002, 0.002], min_length=2, max_length=2)
    x_axis: Vec3 = Field(default_factory=lambda: [1.0, 0.0, 0.0])
    y_axis: Vec3 = Field(default_factory=lambda: [0.0, 1.0, 0.0])


class ImagingConfig(_Strict):
    window: Literal["hann", "rectangular"] = "hann"
    zero_pad_factor: int = Field(default=4, ge=1)
    interpolation: Literal["linear", "nearest"] = "linear"
    grid: GridConfig = Field(default_factory=GridConfig)


class MetrologyConfig(_Strict):
    profile_axis: Literal["cross_range", "range"] = "cross_range"
    noise_cells: float = Field(default=10.0, gt=0)
    # if set, SNR noise cells are the rows this far in range from the peak
    noise_range_offset: Optional[float] = Field(default=None, gt=0)
    range_zero_pad_factor: int = Field(default=8, ge=1)
    # independent simulations averaged in frame-count sweeps; vibration
    # phase is advanced by 2*pi/realizations between them
    realizations: int = Field(default=1, ge=1)


class SweepConfig(_Strict):
    aperture_lengths: Optional[List[float]] = None
    frame_counts: Optional[List[int]] = None
    speeds: Optional[List[float]] = None

    @model_validator(mode="after")
    def _axes(self):
        if self.aperture_lengths is not None and self.frame_counts is not None:
            raise ValueError("aperture_lengths and frame_counts are mutually exclusive")
        if self.aperture_lengths is not None and (
            not self.aperture_lengths or min(self.aperture_lengths) <= 0
        ):
            raise ValueError("aperture_lengths must be positive")
        if self.frame_counts is not None:
            fc = self.frame_counts
            if not fc or fc[0] != 1 or any(b <= a for a, b in zip(fc, fc[1:])):
                raise ValueError("frame_counts must start at 1 and increase strictly")
        if self.speeds is not None and (not self.speeds or min(self.speeds) <= 0):
            raise ValueError("speeds must be positive")
        return self


class OutputConfig(_Strict):
    figures: bool = True
    images: bool = True


class Scenario(_Strict):
    scenario_id: str
    seed: int = 0
    waveform: WaveformConfig = Field(default_factory=WaveformConfig)
    array: ArrayConfig = Field(default_factory=ArrayConfig)
    mount: MountConfig = Field(default_factory=MountConfig)
    trajectory: TrajectoryConfig
    recording: RecordingConfig = Field(default_factory=RecordingConfig)
    targets: List[TargetConfig] = Field(default_factory=list)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    imaging: ImagingConfig = Field(default_factory=ImagingConfig)
    metrology: MetrologyConfig = Field(default_factory=MetrologyConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    output_dir: Optional[str] = None

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


class ImageRequest(_Strict):
    """Stand-alone imaging config for the ``image`` subcommand."""

    imaging: ImagingConfig = Field(default_factory=ImagingConfig)
    aperture_length: Optional[float] = Field(default=None, gt=0)
    n_frames: Optional[int] = Field(default=None, ge=1)
    reference: Optional[Vec3] = None
    metrology: MetrologyConfig = Field(default_factory=MetrologyConfig)


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def _load_yaml(path) -> dict:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return data


def parse_scenario(data: dict) -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(_format_errors(exc)) from None


def load_scenario(path) -> Scenario:
    return parse_scenario(_load_yaml(path))


def load_image_request(path) -> ImageRequest:
    """Accept an imaging config or a full scenario (first sweep point)."""
    data = _load_yaml(path)
    if "trajectory" in data or "scenario_id" in data:
        sc = parse_scenario(data)
        ap = sc.sweep.aperture_lengths[0] if sc.sweep.aperture_lengths else None
        nf = sc.sweep.frame_counts[0] if sc.sweep.frame_counts else None
        return ImageRequest(imaging=sc.imaging, aperture_length=ap, n_frames=nf,
                            metrology=sc.metrology)
    try:
        return ImageRequest.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(_format_errors(exc)) from None


BUNDLED = (
    "rod_resolution_sweep",
    "tcr_resolution_sweep",
    "vibration_study",
    "integration_gain_study",
    "integration_gain_ideal",
)


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled scenario {name!r}; choose from {BUNDLED}")
    return Path(str(resources.files("robosar") / "scenarios" / f"{name}.yaml"))


def bundled_scenario(name: str) -> Scenario:
    return load_scenario(bundled_path(name))
