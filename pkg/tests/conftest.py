import sys

import numpy as np
import pytest
from hypothesis import settings

from robosar.backprojection import ImageGrid
from robosar.echo_sim import PointTarget, simulate_baseband
from robosar.geometry import AntennaArray, MountingTransform, Trajectory, channel_positions
from robosar.waveform import RadarWaveformParams, build_schedule

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def table1() -> RadarWaveformParams:
    return RadarWaveformParams()


@pytest.fixture(scope="session")
def small_params() -> RadarWaveformParams:
    """Short frames with the default RF parameters, for fast end-to-end tests."""
    return RadarWaveformParams(n_chirps=16, t_frame=16 * 200e-6 + 1e-3)


def make_positions(p, speed=0.4, n_frames=1, start=(0.0, 0.0, 0.0), array=None,
                   sampling="chirp_start", **traj_kw):
    traj = Trajectory(start, (speed, 0.0, 0.0), **traj_kw)
    arr = array if array is not None else AntennaArray.default(p)
    return channel_positions(traj, MountingTransform(), arr, build_schedule(p, n_frames), sampling)


def point_scene(p, target=(0.0, 2.0, 0.0), n_frames=1, speed=0.4, amplitude=1.0, **kw):
    pos = make_positions(p, speed=speed, n_frames=n_frames, **kw)
    return simulate_baseband([PointTarget(target, amplitude)], pos, p, n_frames=n_frames)


def small_grid(center=(0.0, 2.0, 0.0), extent=(0.06, 0.06), spacing=(0.003, 0.003)):
    return ImageGrid.centered(center, extent, spacing)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
