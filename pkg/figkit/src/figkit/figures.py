"""Figure builders over previously written run directories.

Each builder takes file contents already parsed by figkit.io and a
matplotlib figure to draw on; render() dispatches by figure id and
saves a PNG.  Nothing here recomputes physics: every plotted number
comes verbatim from the run artifacts.
"""

import os
from dataclasses import dataclass, field
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib import colors
from skimage import measure

from .io import (read_apt_grid, read_spectra_csv, read_summary, read_t22_csv,
                 run_paths)

FIGURE_IDS = ("oam_tkam", "spiral3d", "polarization_map",
              "perturbation_compare")


@dataclass
class FigureRequest:
    """One figure to produce.

    run_dirs maps a label to a run directory; single-run figures use the
    first entry, perturbation_compare overlays all of them.
    """

    figure_id: str
    run_dirs: Dict[str, str]
    out_dir: str
    dpi: int = 150
    extra: Dict[str, object] = field(default_factory=dict)

    def primary_dir(self):
        return next(iter(self.run_dirs.values()))

    def out_path(self):
        return os.path.join(self.out_dir, f"{self.figure_id}.png")


def orientation_hue(orientation):
    """Map a line orientation (radians) to an RGB hue with 180 deg period.

    A line at angle chi is the same line at chi + pi, so the hue wheel
    wraps after half a turn: orientation_hue(x) == orientation_hue(x + pi).
    """
    frac = np.mod(np.asarray(orientation, dtype=float) / np.pi, 1.0)
    hsv = np.stack([frac, np.ones_like(frac), np.ones_like(frac)], axis=-1)
    return colors.hsv_to_rgb(hsv)


def _plot_oam_tkam(request, fig):
    paths = run_paths(request.primary_dir())
    tkam = read_spectra_csv(paths["tkam"])
    summary = read_summary(paths["summary"])

    ax = fig.add_subplot(111)
    for (q, s), entry in sorted(tkam.items()):
        js = entry["j_num"] / entry["j_den"]
        power = entry["power"]
        total = power.sum()
        if total <= 0:
            continue
        sizes = 400.0 * power / total
        color = "tab:red" if s > 0 else "tab:blue"
        keep = sizes > 1e-3
        ax.scatter(np.full(keep.sum(), q), js[keep], s=sizes[keep],
                   color=color, alpha=0.7, edgecolors="none")

    qs = np.array(sorted({q for q, _ in tkam}))
    slope = summary["conservation"]["slope"]
    ax.plot(qs, slope * qs, "k--", lw=1,
            label=f"fit slope {slope:.4f}")
    ax.set_xlabel("harmonic order q")
    ax.set_ylabel("torus-knot angular momentum j")
    ax.set_title("TKAM spectrum per harmonic (red s=+1, blue s=-1)")
    ax.legend(loc="upper left")


def _plot_spiral3d(request, fig):
    meta, grid = read_apt_grid(request.primary_dir())
    intensity = grid[..., 0]
    # high default level so the helical crest of the pulse train stands
    # out instead of the enclosing annulus
    level = float(request.extra.get("iso_fraction", 0.7)) * intensity.max()
    if not intensity.min() < level < intensity.max():
        raise ValueError(
            f"isosurface level {level:.3e} outside intensity range")
    verts, faces, _, _ = measure.marching_cubes(intensity, level=level)

    t_fs = np.asarray(meta["axes"]["t_fs"])
    y = np.asarray(meta["axes"]["y_div_rad"])
    x = np.asarray(meta["axes"]["x_div_rad"])
    # marching_cubes indices -> physical coordinates per axis
    pts = np.column_stack([
        np.interp(verts[:, 0], np.arange(len(t_fs)), t_fs),
        np.interp(verts[:, 1], np.arange(len(y)), y * 1e3),
        np.interp(verts[:, 2], np.arange(len(x)), x * 1e3),
    ])

    ax = fig.add_subplot(111, projection="3d")
    ax.plot_trisurf(pts[:, 2], pts[:, 1], faces, pts[:, 0],
                    cmap="viridis", lw=0.1, alpha=0.9)
    ax.set_xlabel("x divergence (mrad)")
    ax.set_ylabel("y divergence (mrad)")
    ax.set_zlabel("time (fs)")
    ax.set_title("attosecond pulse train isosurface")


def _plot_polarization_map(request, fig):
    meta, grid = read_apt_grid(request.primary_dir())
    intensity = grid[..., 0]
    orientation = grid[..., 1]
    t_fs = np.asarray(meta["axes"]["t_fs"])
    y = np.asarray(meta["axes"]["y_div_rad"]) * 1e3
    x = np.asarray(meta["axes"]["x_div_rad"]) * 1e3

    # frame with the brightest pulse, unless the caller picks one
    it = int(request.extra.get(
        "frame", int(np.argmax(intensity.reshape(len(t_fs), -1).max(axis=1)))))
    frame_i = intensity[it]
    frame_o = orientation[it]

    rgb = orientation_hue(frame_o)
    peak = frame_i.max()
    weight = frame_i / peak if peak > 0 else frame_i
    rgb = rgb * weight[..., None]

    ax = fig.add_subplot(111)
    ax.imshow(rgb, origin="lower", extent=[x[0], x[-1], y[0], y[-1]],
              aspect="equal")
    # crop to the emitting annulus so the beam is not a dot in the frame
    bright = frame_i > 0.01 * frame_i.max()
    if bright.any():
        half = 1.3 * max(np.abs(x[bright.any(axis=0)]).max(),
                         np.abs(y[bright.any(axis=1)]).max())
        ax.set_xlim(-half, half)
        ax.set_ylim(-half, half)
    ax.set_xlabel("x divergence (mrad)")
    ax.set_ylabel("y divergence (mrad)")
    ax.set_title(f"polarization orientation at t = {t_fs[it]:.2f} fs "
                 "(hue period 180 deg)")

    paths = run_paths(request.primary_dir())
    thetas, times, values = read_t22_csv(paths["t22"])
    inset = fig.add_axes([0.70, 0.14, 0.18, 0.18])
    inset.pcolormesh(times, np.degrees(thetas),
                     0.5 * np.angle(values), cmap="hsv",
                     vmin=-np.pi / 2, vmax=np.pi / 2, shading="auto")
    inset.set_xlabel("t (fs)", fontsize=7)
    inset.set_ylabel("T22 phase/2 vs theta (deg)", fontsize=7)
    inset.tick_params(labelsize=6)


def _plot_perturbation_compare(request, fig):
    if len(request.run_dirs) < 2:
        raise ValueError("perturbation_compare needs at least two run "
                         f"directories, got {len(request.run_dirs)}")
    ax = fig.add_subplot(111)
    for label, run_dir in request.run_dirs.items():
        oam = read_spectra_csv(run_paths(run_dir)["oam"])
        qs, widths = [], []
        for (q, s), entry in sorted(oam.items()):
            if s != (+1 if q % 3 == 1 else -1):
                continue
            power = entry["power"]
            total = power.sum()
            if total <= 0:
                continue
            mean = (entry["m"] * power).sum() / total
            var = ((entry["m"] - mean) ** 2 * power).sum() / total
            qs.append(q)
            widths.append(np.sqrt(var))
        ax.plot(qs, widths, "o-", label=label)
    ax.set_xlabel("harmonic order q")
    ax.set_ylabel("OAM spectral width (std of m)")
    ax.set_title("OAM broadening under donut perturbation")
    ax.legend()


_BUILDERS = {
    "oam_tkam": _plot_oam_tkam,
    "spiral3d": _plot_spiral3d,
    "polarization_map": _plot_polarization_map,
    "perturbation_compare": _plot_perturbation_compare,
}


def render(request):
    """Build one figure and save it to request.out_dir; returns the path."""
    if request.figure_id not in _BUILDERS:
        raise ValueError(f"unknown figure id {request.figure_id!r}; "
                         f"known: {', '.join(FIGURE_IDS)}")
    if not request.run_dirs:
        raise ValueError("no run directories given")
    os.makedirs(request.out_dir, exist_ok=True)
    fig = plt.figure(figsize=(7, 5.5))
    try:
        _BUILDERS[request.figure_id](request, fig)
        path = request.out_path()
        fig.savefig(path, dpi=request.dpi)
    finally:
        plt.close(fig)
    return path


def render_all(run_dirs, out_dir, compare_dirs=None):
    """Render every known figure; compare_dirs (label -> dir) feeds the
    perturbation comparison, defaulting to run_dirs when absent."""
    paths = []
    for figure_id in FIGURE_IDS:
        dirs = run_dirs
        if figure_id == "perturbation_compare":
            dirs = compare_dirs or run_dirs
            if len(dirs) < 2:
                continue
        paths.append(render(FigureRequest(figure_id=figure_id,
                                          run_dirs=dirs, out_dir=out_dir)))
    return paths
