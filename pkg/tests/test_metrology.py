import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robosar.backprojection import ImageGrid, SarImage, form_image
from robosar.echo_sim import PointTarget, add_noise, simulate_baseband
from robosar.errors import MainLobeUnresolved, NoSidelobeError
from robosar.geometry import AntennaArray
from robosar.metrology import (
    METRICS_COLUMNS,
    GridRect,
    ProfileCut,
    cumulative_frame_images,
    extract_profile,
    fit_integration_exponent,
    gain_curve_from_snr,
    halfpower_crossings,
    halfpower_width,
    integration_gain_curve,
    main_lobe_bounds,
    measure_snr,
    peak_sidelobe_level,
    range_band_noise_mask,
    range_profile_cut,
    snr_components,
)
from robosar.range_compression import WindowFunction, closed_form_profile, range_compress
from robosar.waveform import RadarWaveformParams

from conftest import make_positions, small_grid

HANN = WindowFunction("hann")


def _image(values, spacing=(0.001, 0.001), **kw):
    values = np.asarray(values, complex)
    grid = ImageGrid.centered((0, 2, 0), ((values.shape[1] - 1) * spacing[0],
                                          (values.shape[0] - 1) * spacing[1]), spacing)
    meta = {"range_resolution": kw.pop("range_resolution", 0.0539)}
    args = dict(aperture_length=0.14, closest_range=2.0, wavelength=3.8435e-3,
                n_frames=1, n_channels=16, n_terms=16)
    args.update(kw)
    return SarImage(values, grid, meta=meta, **args)


def _cut(db, x=None):
    db = np.asarray(db, float)
    x = np.arange(db.size, dtype=float) if x is None else x
    return ProfileCut(x, db)


def test_metrics_columns():
    assert METRICS_COLUMNS == ("scenario_id", "L_a_m", "R0_m", "v_ego_mps", "width_m",
                               "predicted_width_m", "psl_db", "snr_db", "n_frames", "alpha")


def test_profile_peak_is_zero_db(small_params):
    pos = make_positions(small_params, n_frames=6, start=(-0.012, 0, 0))
    cube = simulate_baseband([PointTarget((0.0, 2.0, 0.0), 3.0)], pos, small_params)
    img = form_image(range_compress(cube, HANN, 8), pos, small_grid())
    for axis in ("cross_range", "range"):
        cut = extract_profile(img, axis)
        assert cut.magnitude_db.max() == 0.0
        assert cut.peak_position == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.diff(cut.positions) > 0)


def test_profile_symmetric_for_symmetric_scene(table1):
    # colocated array, track centered on the target: mirror-symmetric geometry
    from robosar.geometry import MountingTransform, Trajectory, channel_positions
    from robosar.waveform import build_schedule

    n = 3
    t_mid = ((n - 1) * table1.t_frame + (table1.n_chirps - 1) * table1.t_rep) / 2
    traj = Trajectory((-0.4 * t_mid, 0, 0), (0.4, 0, 0))
    pos = channel_positions(traj, MountingTransform(), AntennaArray.colocated(table1),
                            build_schedule(table1, n))
    cube = simulate_baseband([PointTarget((0.0, 2.0, 0.0))], pos, table1)
    grid = ImageGrid.centered((0, 2, 0), (0.3, 0.0), (0.002, 0.002))
    cut = extract_profile(form_image(range_compress(cube, HANN, 8), pos, grid))
    db = cut.magnitude_db
    mid = cut.peak_index
    half = min(mid, db.size - 1 - mid)
    assert np.abs(db[mid - half:mid][::-1] - db[mid + 1:mid + half + 1]).max() < 0.1


def test_range_cut_matches_closed_form(table1):
    pos = make_positions(table1, speed=0.0, array=AntennaArray.colocated(table1))
    r0 = 2 * 1.83
    prof = range_compress(simulate_baseband([PointTarget((0, r0 / 2, 0))], pos, table1), HANN, 8)
    cut = range_profile_cut(prof)
    oracle = np.abs(closed_form_profile(table1, HANN, prof.range_axis, r0))
    with np.errstate(divide="ignore"):
        oracle_db = 20 * np.log10(oracle / oracle.max())
    near = oracle_db > -80
    assert np.allclose(cut.positions, prof.range_axis / 2)
    assert np.allclose(cut.magnitude_db[near], oracle_db[near], atol=1e-6)


def test_flat_image_rejected():
    with pytest.raises(ValueError):
        extract_profile(_image(np.ones((5, 5))))
    with pytest.raises(ValueError):
        extract_profile(_image(np.zeros((5, 5))))


@given(st.floats(1.0, 500.0), st.integers(20, 400))
def test_triangle_width(slope, n):
    # window reaches -12 dB on both sides
    x = np.linspace(-12 / slope, 12 / slope, 2 * n + 1)
    db = -slope * np.abs(x)
    assert halfpower_width(ProfileCut(x, db)) == pytest.approx(2 * 3.0103 / slope, rel=1e-4)


def test_width_scale_invariant():
    x = np.linspace(-1, 1, 201)
    mag = np.sinc(4 * x)
    a = halfpower_width(ProfileCut.from_magnitude(x, mag))
    b = halfpower_width(ProfileCut.from_magnitude(x, 37.5 * mag))
    assert a == b


def test_split_peak_flagged_suspect():
    x = np.linspace(-1, 1, 401)
    mag = np.exp(-((x - 0.1) / 0.1) ** 2) + np.exp(-((x + 0.1) / 0.1) ** 2)
    cut = ProfileCut.from_magnitude(x, mag)
    hp = halfpower_crossings(cut)
    assert hp.suspect
    # the -3 dB extent spans both lobes
    assert hp.left < -0.1 and hp.right > 0.1


def test_single_peak_not_suspect():
    x = np.linspace(-1, 1, 401)
    assert not halfpower_crossings(ProfileCut.from_magnitude(x, np.sinc(3 * x))).suspect


def test_missing_crossing():
    with pytest.raises(MainLobeUnresolved, match="main lobe unresolved at grid extent"):
        halfpower_width(_cut([-1.0, -0.5, 0.0, -0.5, -1.0]))
    with pytest.raises(MainLobeUnresolved):
        halfpower_width(_cut([-10.0, 0.0, -1.0]))


def test_psl_of_sinc():
    x = np.linspace(-5, 5, 4001)
    cut = ProfileCut.from_magnitude(x, np.sinc(x))
    assert peak_sidelobe_level(cut) == pytest.approx(-13.26, abs=0.01)
    lo, hi = main_lobe_bounds(cut)
    assert x[lo] == pytest.approx(-1.0, abs=0.01) and x[hi] == pytest.approx(1.0, abs=0.01)


def test_psl_monotone_profile():
    with pytest.raises(NoSidelobeError):
        peak_sidelobe_level(_cut(-np.abs(np.arange(-10, 11.0))))


def test_snr_noiseless_is_infinite():
    v = np.zeros((41, 41))
    v[20, 20] = 1.0
    assert measure_snr(_image(v), GridRect(0, 5)) == math.inf


def test_snr_region_overlap():
    v = np.ones((41, 41))
    v[20, 20] = 10.0
    with pytest.raises(ValueError, match="overlaps"):
        measure_snr(_image(v), GridRect(15, 25, 15, 25))
    with pytest.raises(ValueError, match="empty"):
        measure_snr(_image(v), np.zeros((41, 41), bool))


def _single_term_setup():
    p = RadarWaveformParams(n_tx=1, n_rx=1, n_chirps=4, t_frame=4 * 200e-6)
    pos = make_positions(p, speed=0.0, array=AntennaArray.colocated(p))
    cube = simulate_baseband([PointTarget((0.0, 3.0, 0.0))], pos, p)
    grid = ImageGrid.centered((0, 3.0, 0), (0.0, 4.0), (0.001, 0.005))
    return p, pos, cube, grid


def test_snr_single_chirp_matches_analytic():
    p, pos, cube, grid = _single_term_setup()
    snr_in_db = 10.0
    w = HANN.samples(175)
    analytic = snr_in_db + 10 * np.log10(w.sum() ** 2 / (w ** 2).sum())
    peak = noise = 0.0
    for seed in range(10):
        noisy = add_noise(cube, 10 ** (-snr_in_db / 10), seed)
        img = form_image(range_compress(noisy, HANN, 8), pos, grid, slow=[0])
        pk, nz = snr_components(img, range_band_noise_mask(img, 0.3))
        peak, noise = peak + pk, noise + nz
    assert 10 * np.log10(peak / noise) == pytest.approx(analytic, abs=1.0)


def test_snr_doubling_noise():
    p, pos, cube, grid = _single_term_setup()
    vals = []
    for power in (0.01, 0.02):
        img = form_image(range_compress(add_noise(cube, power, 4), HANN, 8), pos, grid, slow=[0])
        vals.append(measure_snr(img, range_band_noise_mask(img, 0.3)))
    assert vals[0] - vals[1] == pytest.approx(3.0, abs=0.5)


def test_default_noise_mask_excludes_peak():
    v = np.random.default_rng(0).standard_normal((201, 201)) * 1e-3
    v[100, 100] = 1.0
    img = _image(v, spacing=(0.01, 0.01), range_resolution=0.05, aperture_length=0.5)
    snr = measure_snr(img)
    assert 50 < snr < 70


def test_fit_exponent_exact():
    n = np.arange(1, 27)
    for alpha in (1.0, 0.5, 0.73):
        assert fit_integration_exponent(n, 10 * alpha * np.log10(n)) == pytest.approx(alpha, rel=1e-12)


def test_gain_curve_normalization():
    g = gain_curve_from_snr([12.0, 15.0, 16.5], [1, 2, 3])
    assert g.gain_db[0] == 0.0
    assert np.allclose(g.coherent_line(), 10 * np.log10([1, 2, 3]))
    with pytest.raises(ValueError):
        gain_curve_from_snr([1.0, 2.0], [2, 3])


def _gain_setup(small_params, seed, random_phase):
    pos = make_positions(small_params, n_frames=16, start=(-0.02, 0, 0))
    cube = simulate_baseband([PointTarget((0.0, 2.0, 0.0))], pos, small_params)
    data = cube.data.copy()
    if random_phase:
        rng = np.random.default_rng(100 + seed)
        phases = np.exp(2j * np.pi * rng.random(16))
        data *= np.repeat(phases, 4)[None, None, :, None]
    cube = add_noise(type(cube)(data, small_params, pos, 16), 1.0, seed)
    return range_compress(cube, HANN, 4), pos


@pytest.mark.parametrize("random_phase", [False, True])
def test_integration_gain(small_params, random_phase):
    grid = ImageGrid.centered((0, 2.0, 0), (0.0, 3.0), (0.01, 0.01))
    counts = [1, 2, 4, 8, 16]
    peak = np.zeros(len(counts))
    noise = np.zeros(len(counts))
    for seed in range(12):
        prof, pos = _gain_setup(small_params, seed, random_phase)
        for k, img in enumerate(cumulative_frame_images(prof, pos, grid, counts)):
            pk, nz = snr_components(img, range_band_noise_mask(img, 0.35))
            peak[k] += pk
            noise[k] += nz
    curve = gain_curve_from_snr(10 * np.log10(peak / noise), counts)
    assert curve.gain_db[0] == 0.0
    if random_phase:
        # signal and noise powers both grow as N: no net gain
        assert curve.alpha < 1
        assert abs(curve.alpha) < 0.3
    else:
        assert curve.alpha == pytest.approx(1.0, abs=0.05)


def test_integration_gain_curve_single_run(small_params):
    prof, pos = _gain_setup(small_params, 0, False)
    grid = ImageGrid.centered((0, 2.0, 0), (0.0, 3.0), (0.01, 0.01))
    mask = np.abs(grid.points()[..., 1] - 2.0) > 0.35
    curve = integration_gain_curve(prof, pos, grid, [1, 4, 16], noise_region=mask)
    assert curve.gain_db[0] == 0.0
    assert curve.n_frames.tolist() == [1, 4, 16]
    assert 0.5 < curve.alpha < 1.5
    with pytest.raises(ValueError):
        cumulative_frame_images(prof, pos, grid, [4, 2])
    with pytest.raises(ValueError):
        cumulative_frame_images(prof, pos, grid, [1, 32])
