"""Command-line front end: ``robosar {simulate,image,measure,sweep,validate}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError

OUT_DIR_ENV = "ROBOSAR_OUT_DIR"

EXIT_CONFIG = 2
EXIT_FAILURE = 1
EXIT_MEASUREMENT = 3


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int = EXIT_FAILURE):
        super().__init__(message)
        self.kind = kind
        self.code = code


def _out_dir(args, fallback) -> Path:
    path = args.out_dir or os.environ.get(OUT_DIR_ENV) or fallback
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_arg(args, name="config"):
    path = getattr(args, name) or getattr(args, f"{name}_flag", None)
    if path is None:
        raise CliError("usage", f"missing {name} path")
    return path


def cmd_validate(args) -> dict:
    from .config import load_scenario
    from .pipeline import validate

    sc = load_scenario(_config_arg(args))
    notes = validate(sc)
    return {"status": "ok", "scenario_id": sc.scenario_id, "hash": sc.digest(), "notes": notes}


def cmd_simulate(args) -> dict:
    from .config import load_scenario
    from .fileio import write_cube
    from .pipeline import scene_reference, simulate, validate

    sc = load_scenario(_config_arg(args))
    if args.seed is not None:
        sc = sc.model_copy(update={"seed": args.seed})
    validate(sc)
    out = _out_dir(args, sc.output_dir or f"runs/{sc.scenario_id}")
    written = []
    for k, speed in enumerate(sc.sweep.speeds or [sc.trajectory.speed]):
        cube = simulate(sc, speed, speed_index=k)
        path = out / f"cube_s{k:02d}.sarb"
        write_cube(path, cube, {
            "scenario_id": sc.scenario_id,
            "scenario_hash": sc.digest(),
            "seed": sc.seed,
            "v_ego_mps": speed,
            "reference": scene_reference(sc).tolist(),
        })
        written.append(str(path))
    return {"status": "ok", "cubes": written}


def cmd_image(args) -> dict:
    from dataclasses import replace

    from .config import load_image_request
    from .fileio import quantized, read_cube, write_image
    from .pipeline import image_from_cube

    cube, meta = read_cube(args.cube)
    req = load_image_request(_config_arg(args))
    image = image_from_cube(cube, req, req.reference or meta.get("reference"))
    point = {}
    if req.aperture_length is not None:
        point = {"aperture_length": req.aperture_length}
    elif req.n_frames is not None:
        point = {"n_frames": req.n_frames}
    image = replace(quantized(image), meta={**image.meta,
                                            "scenario_id": meta.get("scenario_id", ""),
                                            "v_ego_mps": meta.get("v_ego_mps", float("nan")),
                                            "point": point,
                                            "noise_cells": req.metrology.noise_cells,
                                            "noise_range_offset":
                                                req.metrology.noise_range_offset})
    out = _out_dir(args, Path(args.cube).parent)
    path = out / (args.name or "image.sarb")
    write_image(path, image)
    return {"status": "ok", "image": str(path)}


def cmd_measure(args) -> dict:
    from .fileio import read_image, write_image_db_csv, write_metrics_csv, write_profile_csv
    from .pipeline import measure_image

    image = read_image(args.image)
    cells = args.noise_cells or image.meta.get("noise_cells") or 10.0
    offset = args.noise_range_offset or image.meta.get("noise_range_offset")
    row, cut, errors = measure_image(image, image.meta.get("scenario_id", ""),
                                     image.meta.get("v_ego_mps", float("nan")),
                                     args.axis, cells, offset)
    out = _out_dir(args, Path(args.image).parent)
    write_metrics_csv(out / "metrics.csv", [row])
    written = [str(out / "metrics.csv")]
    if cut is not None:
        write_profile_csv(out / f"profile_{args.axis}.csv", cut)
        written.append(str(out / f"profile_{args.axis}.csv"))
    if args.db_csv:
        write_image_db_csv(out / "image_db.csv", image)
        written.append(str(out / "image_db.csv"))
    if errors:
        raise CliError("measurement", "; ".join(errors), EXIT_MEASUREMENT)
    return {"status": "ok", "files": written}


def cmd_sweep(args) -> dict:
    from .config import load_scenario
    from .pipeline import run_scenario

    sc = load_scenario(_config_arg(args))
    out = args.out_dir or os.environ.get(OUT_DIR_ENV)
    manifest = run_scenario(sc, out, workers=args.workers, seed=args.seed,
                            figures=False if args.no_figures else None)
    return {"status": "ok" if not manifest.errors else "partial",
            "scenario_hash": manifest.scenario_hash,
            "errors": manifest.errors,
            "n_artifacts": len(manifest.artifacts)}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", help=f"output directory (env {OUT_DIR_ENV} also works)")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = argparse.ArgumentParser(prog="robosar", description=__doc__)
    parser.add_argument("--version", action="version", version=f"robosar {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p, positional=True):
        if positional:
            p.add_argument("config", nargs="?", help="scenario YAML")
        p.add_argument("--config", dest="config_flag", help="scenario YAML")

    p = sub.add_parser("validate", parents=[common], help="dry-run config check")
    with_config(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", parents=[common], help="write baseband cubes only")
    with_config(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("image", parents=[common], help="form an image from a cube")
    p.add_argument("cube")
    with_config(p)
    p.add_argument("--name", help="output file name (default image.sarb)")
    p.set_defaults(func=cmd_image)

    p = sub.add_parser("measure", parents=[common], help="metrics row and profile cut")
    p.add_argument("image")
    p.add_argument("--axis", choices=("cross_range", "range"), default="cross_range")
    p.add_argument("--noise-cells", type=float,
                   help="noise region beyond this many resolution cells (default 10)")
    p.add_argument("--noise-range-offset", type=float,
                   help="noise region: rows at least this many meters in range from the peak")
    p.add_argument("--db-csv", action="store_true", help="also write the dB image as CSV")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("sweep", parents=[common], help="run a full scenario")
    with_config(p)
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    p.set_defaults(func=cmd_sweep)
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = args.func(args)
    except CliError as exc:
        return _fail(exc.kind, str(exc), exc.code)
    except ConfigurationError as exc:
        return _fail("configuration", str(exc), EXIT_CONFIG)
    except (OSError, ValueError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_FAILURE)
    print(json.dumps(result, default=_jsonable))
    return 0


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    return str(o)


if __name__ == "__main__":
    sys.exit(main())
