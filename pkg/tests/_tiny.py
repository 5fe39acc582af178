"""A small scenario dict shared by the config, pipeline and CLI tests."""

import copy

import yaml

TINY = {
    "scenario_id": "tiny",
    "seed": 11,
    "waveform": {"n_chirps": 16, "t_frame": 0.0042},
    "trajectory": {"speed": 0.4},
    "targets": [{"position": [0.0, 2.0, 0.0], "amplitude": 1.0}],
    "noise": {"snr_db": 0.0},
    "imaging": {"zero_pad_factor": 4,
                "grid": {"extent": [0.4, 0.3], "spacing": [0.004, 0.004]}},
    "metrology": {"noise_range_offset": 0.1},
    "sweep": {"aperture_lengths": [0.05, 0.08]},
    "output": {"figures": False},
}


def tiny(**updates):
    d = copy.deepcopy(TINY)
    for key, value in updates.items():
        if value is None:
            d.pop(key, None)
        else:
            d[key] = value
    return d


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return path
