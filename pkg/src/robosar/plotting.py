"""Report figures rendered next to the CSV outputs."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .fileio import read_csv  # noqa: E402

_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "lines.linewidth": 1.2,
}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_resolution_sweep(rows, path: Path, title: str = "") -> Path:
    """Measured half-power width against aperture length, one series per speed."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        speeds = sorted({r["v_ego_mps"] for r in rows})
        for v in speeds:
            sel = sorted((r for r in rows if r["v_ego_mps"] == v), key=lambda r: r["L_a_m"])
            L = np.array([r["L_a_m"] for r in sel])
            ax.plot(L * 100, np.array([r["width_m"] for r in sel]) * 1000, "o-",
                    ms=3, label=f"measured, v = {v:g} m/s")
            ax.plot(L * 100, np.array([r["predicted_width_m"] for r in sel]) * 1000, "--",
                    color=ax.lines[-1].get_color(), alpha=0.6, label="predicted")
        ax.set_xlabel("synthetic aperture length (cm)")
        ax.set_ylabel("cross-range resolution (mm)")
        ax.set_title(title)
        ax.legend()
        return _save(fig, path)


def plot_profile(cut, path: Path, title: str = "") -> Path:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(cut.positions * 1000, cut.magnitude_db)
        ax.axhline(-3.0, color="k", ls=":", lw=0.8)
        ax.set_ylim(max(cut.magnitude_db.min(), -40.0) - 2, 2)
        ax.set_xlabel(f"{cut.axis.replace('_', '-')} offset (mm)")
        ax.set_ylabel("normalized magnitude (dB)")
        ax.set_title(title)
        return _save(fig, path)


def plot_gain_curve(gain, path: Path, title: str = "") -> Path:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        n = np.asarray(gain.n_frames, float)
        ax.plot(n, gain.gain_db, "o-", ms=3, label=f"measured, alpha = {gain.alpha:.2f}")
        ax.plot(n, 10 * np.log10(n), "k--", label="coherent (alpha = 1)")
        ax.plot(n, 5 * np.log10(n), "k:", label="alpha = 0.5")
        ax.set_xlabel("integrated frames")
        ax.set_ylabel("SNR gain (dB)")
        ax.set_title(title)
        ax.legend()
        return _save(fig, path)


def plot_range_profile(csv_path: Path, path: Path, title: str = "") -> Path:
    rows = read_csv(csv_path)
    r = np.array([float(x["range_m"]) for x in rows])
    m = np.array([float(x["magnitude_db"]) for x in rows])
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(r, m)
        ax.set_xlabel("range (m)")
        ax.set_ylabel("magnitude (dB)")
        ax.set_title(title)
        return _save(fig, path)


def plot_image(image, path: Path, dynamic_range: float = 40.0, title: str = "") -> Path:
    mag = np.abs(image.values)
    peak = mag.max()
    db = 20 * np.log10(np.maximum(mag, peak * 1e-12) / peak) if peak > 0 else np.zeros_like(mag)
    g = image.grid
    x = (g.x_coords - g.x_coords[-1] / 2) * 1000
    y = (g.y_coords - g.y_coords[-1] / 2) * 1000
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        im = ax.imshow(db, origin="lower", extent=(x[0], x[-1], y[0], y[-1]), aspect="auto",
                       vmin=-dynamic_range, vmax=0, cmap="viridis")
        fig.colorbar(im, ax=ax, label="dB")
        ax.set_xlabel("cross-range (mm)")
        ax.set_ylabel("range (mm)")
        ax.set_title(title)
        return _save(fig, path)


def render_report(out_dir: Path, scenario_id: str, rows, results) -> list[Path]:
    """All figures a scenario run supports; returns the written paths."""
    fig_dir = Path(out_dir) / "figures"
    written = []
    finite = [r for r in rows if math.isfinite(r["width_m"])]
    if len({r["L_a_m"] for r in finite}) > 1 and all(r["alpha"] is None for r in rows):
        written.append(plot_resolution_sweep(finite, fig_dir / "resolution_sweep.png", scenario_id))
    for res in results:
        if res["gain"] is not None:
            written.append(plot_gain_curve(res["gain"], fig_dir / f"gain_v{res['speed']:.3f}.png",
                                           scenario_id))
        cuts = [c for c in res["cuts"] if c[2] is not None]
        # first and last sweep points bracket the behaviour
        for pid, _, cut in cuts[:1] + cuts[1:][-1:]:
            written.append(plot_profile(cut, fig_dir / f"profile_{pid}.png", f"{scenario_id} {pid}"))
    rp = Path(out_dir) / "range_profile.csv"
    if rp.exists():
        written.append(plot_range_profile(rp, fig_dir / "range_profile.png", scenario_id))
    return written
