"""Scenario orchestration: simulate, compress, backproject, measure, persist."""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import __version__
from .backprojection import (
    ImageGrid,
    SarImage,
    form_image,
    predicted_cross_range_resolution,
    slow_indices_for_aperture,
)
from .config import ImageRequest, Scenario, load_scenario
from .echo_sim import BasebandCube, PointTarget, add_noise, simulate_baseband
from .errors import ConfigurationError
from .fileio import (
    quantized,
    write_csv,
    write_cube,
    write_image,
    write_metrics_csv,
    write_profile_csv,
    write_range_profile_csv,
)
from .geometry import (
    AntennaArray,
    DriftSpec,
    MountingTransform,
    Trajectory,
    VibrationSpec,
    aperture_length,
    channel_positions,
    closest_approach_range,
)
from .metrology import (
    ProfileCut,
    default_noise_mask,
    extract_profile,
    gain_curve_from_snr,
    fit_integration_exponent,
    halfpower_width,
    measure_snr,
    peak_sidelobe_level,
    range_band_noise_mask,
    snr_components,
)
from .range_compression import WindowFunction, range_compress
from .waveform import (
    RadarWaveformParams,
    build_schedule,
    max_two_way_range,
    slow_time_count,
)

log = logging.getLogger(__name__)


@dataclass
class RunManifest:
    scenario_id: str
    scenario_hash: str
    tool_version: str
    started: str
    finished: str = ""
    artifacts: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


# -- building blocks ----------------------------------------------------------


def build_waveform(sc: Scenario) -> RadarWaveformParams:
    return RadarWaveformParams(**sc.waveform.model_dump())


def build_array(sc: Scenario, p: RadarWaveformParams) -> AntennaArray:
    if sc.array.layout == "default":
        arr = AntennaArray.default(p)
    elif sc.array.layout == "colocated":
        arr = AntennaArray.colocated(p)
    else:
        arr = AntennaArray(sc.array.tx_offsets, sc.array.rx_offsets)
    arr.check(p)
    return arr


def build_mount(sc: Scenario) -> MountingTransform:
    return MountingTransform(sc.mount.translation, sc.mount.rotation)


def scene_reference(sc: Scenario) -> np.ndarray:
    c = sc.imaging.grid.center
    if c == "target":
        if not sc.targets:
            return np.asarray(sc.trajectory.pass_point, float) + np.array([0.0, 2.0, 0.0])
        return np.asarray(sc.targets[0].position, float)
    return np.asarray(c, float)


def build_grid(sc: Scenario) -> ImageGrid:
    g = sc.imaging.grid
    return ImageGrid.centered(scene_reference(sc), tuple(g.extent), tuple(g.spacing),
                              g.x_axis, g.y_axis)


def grid_from_request(req: ImageRequest, reference) -> ImageGrid:
    g = req.imaging.grid
    center = reference if g.center == "target" else g.center
    return ImageGrid.centered(center, tuple(g.extent), tuple(g.spacing), g.x_axis, g.y_axis)


def recording_frames(sc: Scenario, speed: float, p: RadarWaveformParams) -> int:
    n = sc.recording.n_frames
    if n != "auto":
        return int(n)
    if sc.sweep.frame_counts:
        return max(sc.sweep.frame_counts)
    if sc.sweep.aperture_lengths:
        duration = max(sc.sweep.aperture_lengths) / speed
        return int(math.ceil(duration / p.t_frame)) + 1 + sc.recording.margin_frames
    return 1


def recording_midpoint(p: RadarWaveformParams, n_frames: int) -> float:
    return ((n_frames - 1) * p.t_frame + (p.n_chirps - 1) * p.t_rep) / 2


def build_trajectory(sc: Scenario, speed: float, p: RadarWaveformParams, n_frames: int,
                     phase_offset: float = 0.0) -> Trajectory:
    tc = sc.trajectory
    heading = np.asarray(tc.heading, float)
    norm = np.linalg.norm(heading)
    if norm == 0:
        raise ConfigurationError("trajectory.heading: must be non-zero")
    velocity = speed * heading / norm
    t_mid = recording_midpoint(p, n_frames)
    start = np.asarray(tc.pass_point, float) - velocity * t_mid
    vib = None
    if tc.vibration is not None:
        v = tc.vibration
        phase = v.phase + phase_offset
        if v.phase_reference == "pass_point":
            phase -= 2 * np.pi * v.frequency * t_mid
        vib = VibrationSpec(v.frequency, v.amplitude, v.direction, phase)
    drift = None
    if tc.drift is not None:
        d = tc.drift
        drift = DriftSpec(d.position_sigma, d.angle_sigma, d.seed, d.knot_interval)
    return Trajectory(start, velocity, vib, drift, tc.orientation)


def noise_power(sc: Scenario) -> float:
    n = sc.noise
    if n.power is not None:
        return float(n.power)
    if n.snr_db is not None:
        ref = abs(sc.targets[0].complex_amplitude) ** 2 if sc.targets else 1.0
        return ref * 10 ** (-n.snr_db / 10)
    return 0.0


def _seed(sc: Scenario, *keys: int) -> int:
    return int(np.random.SeedSequence([sc.seed, *keys]).generate_state(1)[0])


def simulate(sc: Scenario, speed: float, *, speed_index: int = 0, realization: int = 0,
             phase_offset: float = 0.0) -> BasebandCube:
    """Noisy baseband cube of one recording, rounded to its persisted precision.

    Echoes come from the true antenna positions; the cube carries the
    nominal ones (vibration and drift are unknown to the imager).
    """
    p = build_waveform(sc)
    n_frames = recording_frames(sc, speed, p)
    traj = build_trajectory(sc, speed, p, n_frames, phase_offset)
    sched = build_schedule(p, n_frames)
    mount, array = build_mount(sc), build_array(sc, p)
    true_pos = channel_positions(traj, mount, array, sched, sc.recording.sampling)
    targets = [PointTarget(t.position, t.complex_amplitude) for t in sc.targets]
    cube = simulate_baseband(targets, true_pos, p, n_frames=n_frames)
    cube = add_noise(cube, noise_power(sc), _seed(sc, speed_index, realization))
    # the imager only knows the estimated trajectory
    nominal = channel_positions(traj.nominal(), mount, array, sched, "chirp_start")
    return replace(cube, data=cube.data.astype(np.complex64), positions=nominal)


def validate(sc: Scenario) -> list[str]:
    """Cross-field checks beyond the schema; returns human-readable notes."""
    notes = []
    p = build_waveform(sc)
    build_array(sc, p)
    build_mount(sc)
    grid = build_grid(sc)
    r_gate = max_two_way_range(p)
    for speed in sc.sweep.speeds or [sc.trajectory.speed]:
        n = recording_frames(sc, speed, p)
        traj = build_trajectory(sc, speed, p, n)
        if sc.sweep.aperture_lengths:
            span = speed * (2 * recording_midpoint(p, n))
            if max(sc.sweep.aperture_lengths) > span:
                raise ConfigurationError(
                    f"sweep.aperture_lengths: {max(sc.sweep.aperture_lengths)} m exceeds "
                    f"the {span:.3f} m recorded at {speed} m/s"
                )
        ends = traj.base_position(np.array([0.0, 2 * recording_midpoint(p, n)]))
        far = max(np.linalg.norm(ends[:, None] - grid.corners()[None], axis=-1).max(), 0)
        # 2 * one-way distance plus the array extent must fit the range gate
        if 2 * far + 0.1 >= r_gate:
            raise ConfigurationError(
                f"imaging.grid: two-way range {2 * far:.2f} m reaches the {r_gate:.2f} m gate"
            )
        for t in sc.targets:
            r = np.linalg.norm(ends - np.asarray(t.position), axis=-1).max()
            if 2 * r >= r_gate:
                raise ConfigurationError(f"targets: {t.position} beyond the range gate")
        notes.append(f"speed {speed} m/s: {n} frames")
    return notes


# -- measurement --------------------------------------------------------------


def noise_mask(image: SarImage, noise_cells: float = 10.0,
               noise_range_offset: Optional[float] = None) -> np.ndarray:
    if noise_range_offset is not None:
        return range_band_noise_mask(image, noise_range_offset)
    return default_noise_mask(image, noise_cells)


def measure_image(image: SarImage, scenario_id: str, v_ego: float,
                  axis: str = "cross_range", noise_cells: float = 10.0,
                  noise_range_offset: Optional[float] = None):
    """Metrics row for one image plus its profile cut and any failures."""
    errors = []
    row = {
        "scenario_id": scenario_id,
        "L_a_m": image.aperture_length,
        "R0_m": image.closest_range,
        "v_ego_mps": v_ego,
        "width_m": math.nan,
        "predicted_width_m": math.nan,
        "psl_db": math.nan,
        "snr_db": math.nan,
        "n_frames": image.n_frames,
        "alpha": None,
    }
    try:
        if axis == "cross_range":
            row["predicted_width_m"] = predicted_cross_range_resolution(
                image.wavelength, image.aperture_length, image.closest_range)
        else:
            row["predicted_width_m"] = image.meta.get("range_resolution", math.nan)
    except ValueError as exc:
        errors.append(f"predicted_width: {exc}")
    cut = None
    try:
        cut = extract_profile(image, axis)
    except ValueError as exc:
        errors.append(f"profile: {exc}")
        return row, cut, errors
    for key, fn in (("width_m", halfpower_width), ("psl_db", peak_sidelobe_level)):
        try:
            row[key] = fn(cut)
        except ValueError as exc:
            errors.append(f"{key}: {exc}")
    try:
        row["snr_db"] = measure_snr(image, noise_mask(image, noise_cells, noise_range_offset))
    except ValueError as exc:
        errors.append(f"snr_db: {exc}")
    return row, cut, errors


# -- sweeps -------------------------------------------------------------------


def _images_for_apertures(profiles, positions, grid, lengths, reference, interpolation):
    """Nested centered apertures, each image extending the previous one."""
    order = np.argsort(lengths)
    images = [None] * len(lengths)
    done = np.zeros(positions.n_slow, dtype=bool)
    acc = None
    for k in order:
        sel = slow_indices_for_aperture(positions, reference, lengths[k])
        new = sel[~done[sel]]
        part = form_image(profiles, positions, grid, interpolation, slow=new, reference=reference)
        done[sel] = True
        if acc is None:
            acc = part
        else:
            acc = acc + part
        sub = positions.select(np.flatnonzero(done))
        acc = replace(
            acc,
            aperture_length=aperture_length(sub),
            closest_range=closest_approach_range(sub, reference),
            n_frames=int(np.unique(np.flatnonzero(done) // slow_time_count(profiles.params)).size),
            n_terms=int(positions.tx.shape[0] * positions.rx.shape[1] * done.sum()),
        )
        images[k] = acc
    return images


def _point_id(speed_index: int, k: int) -> str:
    return f"s{speed_index:02d}_p{k:03d}"


def run_speed(sc: Scenario, speed: float, speed_index: int, out_dir: Path) -> dict:
    """Execute every sweep point of one recording; files go under ``out_dir``."""
    t0 = time.perf_counter()
    grid = build_grid(sc)
    reference = scene_reference(sc)
    window = WindowFunction(sc.imaging.window)
    interp = sc.imaging.interpolation
    axis = sc.metrology.profile_axis
    rows, errors, artifacts, cuts = [], [], [], []
    gain = None

    cube = simulate(sc, speed, speed_index=speed_index)
    profiles = range_compress(cube, window, sc.imaging.zero_pad_factor)
    positions = cube.positions
    spf = slow_time_count(cube.params)

    if speed_index == 0:
        # single-chirp range line at the metrology zero-pad factor
        mid = cube.data.shape[2] // 2
        one = replace(cube, data=cube.data[:, :, mid : mid + 1], n_frames=1)
        rp = range_compress(one, window, sc.metrology.range_zero_pad_factor)
        path = out_dir / "range_profile.csv"
        write_range_profile_csv(path, rp)
        artifacts.append(path)

    if sc.sweep.frame_counts:
        counts = list(sc.sweep.frame_counts)
        labels = [(_point_id(speed_index, k), {"n_frames": n}) for k, n in enumerate(counts)]
        # peak and noise powers pooled linearly over realizations; averaging
        # dB values would bias the single-frame SNR upward
        peak_sum = np.zeros(len(counts))
        noise_sum = np.zeros(len(counts))
        images0 = None
        for real in range(sc.metrology.realizations):
            if real == 0:
                c, prof = cube, profiles
            else:
                offset = 2 * np.pi * real / sc.metrology.realizations
                c = simulate(sc, speed, speed_index=speed_index, realization=real,
                             phase_offset=offset)
                prof = range_compress(c, window, sc.imaging.zero_pad_factor)
            imgs = []
            acc = None
            prev = 0
            for n in counts:
                part = form_image(prof, c.positions, grid, interp,
                                  slow=np.arange(prev * spf, n * spf), reference=reference)
                acc = part if acc is None else acc + part
                acc = replace(acc, aperture_length=aperture_length(
                    c.positions.select(np.arange(n * spf))), n_frames=n)
                imgs.append(quantized(acc))
                prev = n
            for i, img in enumerate(imgs):
                try:
                    pk, nz = snr_components(img, noise_mask(img, sc.metrology.noise_cells,
                                                            sc.metrology.noise_range_offset))
                except ValueError as exc:
                    pk, nz = math.nan, math.nan
                    errors.append(f"{sc.scenario_id} realization {real} N_f={img.n_frames}: {exc}")
                peak_sum[i] += pk
                noise_sum[i] += nz
            if real == 0:
                images0 = imgs
        with np.errstate(divide="ignore", invalid="ignore"):
            snr_mean = 10 * np.log10(peak_sum / noise_sum)
        gain = gain_curve_from_snr(snr_mean, counts)
        images = images0
    else:
        if sc.sweep.aperture_lengths:
            lengths = list(sc.sweep.aperture_lengths)
            images = _images_for_apertures(profiles, positions, grid, lengths, reference, interp)
            labels = [(_point_id(speed_index, k), {"aperture_length": L})
                      for k, L in enumerate(lengths)]
        else:
            images = [form_image(profiles, positions, grid, interp, reference=reference)]
            labels = [(_point_id(speed_index, 0), {})]
        images = [quantized(img) for img in images]

    for idx, ((pid, point), img) in enumerate(zip(labels, images)):
        img = replace(img, meta={**img.meta, "scenario_id": sc.scenario_id,
                                 "v_ego_mps": speed, "point": point,
                                 "noise_cells": sc.metrology.noise_cells,
                                 "noise_range_offset": sc.metrology.noise_range_offset})
        row, cut, errs = measure_image(img, sc.scenario_id, speed, axis, sc.metrology.noise_cells,
                                       sc.metrology.noise_range_offset)
        if gain is not None:
            row["snr_db"] = float(gain.snr_db[idx])
            row["alpha"] = gain.alpha
        errors.extend(f"{sc.scenario_id} {pid}: {e}" for e in errs)
        rows.append(row)
        pdir = out_dir / "points" / pid
        pdir.mkdir(parents=True, exist_ok=True)
        if sc.output.images:
            write_image(pdir / "image.sarb", img)
            artifacts += [pdir / "image.sarb", pdir / "image.sarb.json"]
        if cut is not None:
            write_profile_csv(pdir / f"profile_{axis}.csv", cut)
            artifacts.append(pdir / f"profile_{axis}.csv")
        cuts.append((pid, point, cut))
    log.info("speed %.3f m/s: %d points in %.1f s", speed, len(rows), time.perf_counter() - t0)
    return {"rows": rows, "errors": errors, "artifacts": [str(a) for a in artifacts],
            "cuts": cuts, "gain": gain, "speed": speed}


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def run_scenario(config: Union[str, Path, Scenario], out_dir=None, *, workers: int = 1,
                 seed: Optional[int] = None, figures: Optional[bool] = None) -> RunManifest:
    """Run every sweep point of a scenario and write metrics, profiles, and images."""
    sc = config if isinstance(config, Scenario) else load_scenario(config)
    if seed is not None:
        sc = sc.model_copy(update={"seed": seed})
    validate(sc)
    out = Path(out_dir or sc.output_dir or f"runs/{sc.scenario_id}")
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(sc.scenario_id, sc.digest(), __version__, _now())

    speeds = list(sc.sweep.speeds or [sc.trajectory.speed])
    jobs = [(sc, s, k, out) for k, s in enumerate(speeds)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_speed_job, jobs))
    else:
        results = [_run_speed_job(j) for j in jobs]

    rows = [r for res in results for r in res["rows"]]
    write_metrics_csv(out / "metrics.csv", rows)
    manifest.artifacts.append(str(out / "metrics.csv"))
    for res in results:
        manifest.artifacts += res["artifacts"]
        manifest.errors += res["errors"]
        if res["gain"] is not None:
            g = res["gain"]
            path = out / f"gain_curve_v{res['speed']:.3f}.csv"
            write_csv(path, ("n_frames", "gain_db", "coherent_db", "snr_db", "alpha"),
                      ({"n_frames": int(n), "gain_db": gd, "coherent_db": 10 * math.log10(n),
                        "snr_db": s, "alpha": g.alpha}
                       for n, gd, s in zip(g.n_frames, g.gain_db, g.snr_db)))
            manifest.artifacts.append(str(path))

    if sc.output.figures if figures is None else figures:
        from .plotting import render_report

        manifest.artifacts += [str(p) for p in render_report(out, sc.scenario_id, rows, results)]

    manifest.finished = _now()
    manifest.artifacts = sorted(set(manifest.artifacts))
    (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=1) + "\n")
    return manifest


def _run_speed_job(job):
    sc, speed, k, out = job
    return run_speed(sc, speed, k, out)


def image_from_cube(cube: BasebandCube, req: ImageRequest, reference=None) -> SarImage:
    """Form the image described by ``req`` from a persisted cube."""
    if reference is None:
        reference = req.reference
    if reference is None:
        raise ConfigurationError("reference: scene point unknown; set it in the imaging config")
    reference = np.asarray(reference, float)
    grid = grid_from_request(req, reference)
    profiles = range_compress(cube, WindowFunction(req.imaging.window), req.imaging.zero_pad_factor)
    pos = cube.positions
    slow = None
    if req.aperture_length is not None:
        return _images_for_apertures(profiles, pos, grid, [req.aperture_length], reference,
                                     req.imaging.interpolation)[0]
    if req.n_frames is not None:
        slow = np.arange(req.n_frames * slow_time_count(cube.params))
    return form_image(profiles, pos, grid, req.imaging.interpolation, slow=slow,
                      reference=reference)
