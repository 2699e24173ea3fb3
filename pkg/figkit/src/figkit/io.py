"""Readers for the simulator's documented output contracts.

Every reader validates the schema it depends on and raises SchemaError
with an explicit column/shape diagnostic on mismatch.
"""

import json
import os

import numpy as np

SPECTRA_HEADER = "q,s,m,j_num,j_den,power"
T22_HEADER = "theta_rad,t_fs,re_t22,im_t22"


class SchemaError(ValueError):
    """An input file does not match its documented contract."""


def _require(path):
    if not os.path.isfile(path):
        raise SchemaError(f"missing input file: {path}")
    return path


def read_spectra_csv(path):
    """Angular-momentum spectra rows -> dict keyed by (q, s).

    Each value holds integer OAM indices m, exact TKAM numerators and
    denominators, and the power column, in file order.
    """
    _require(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != SPECTRA_HEADER:
            raise SchemaError(
                f"{path}: header {header!r}, expected {SPECTRA_HEADER!r}")
        out = {}
        for lineno, line in enumerate(fh, start=2):
            parts = line.strip().split(",")
            if len(parts) != 6:
                raise SchemaError(
                    f"{path}:{lineno}: {len(parts)} columns, expected 6")
            try:
                q, s, m = int(parts[0]), int(parts[1]), int(parts[2])
                j_num, j_den = int(parts[3]), int(parts[4])
                power = float(parts[5])
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc
            entry = out.setdefault((q, s), {"m": [], "j_num": [],
                                            "j_den": [], "power": []})
            entry["m"].append(m)
            entry["j_num"].append(j_num)
            entry["j_den"].append(j_den)
            entry["power"].append(power)
    if not out:
        raise SchemaError(f"{path}: no data rows")
    return {key: {name: np.asarray(vals) for name, vals in entry.items()}
            for key, entry in out.items()}


def read_summary(path):
    _require(path)
    with open(path, "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    for key in ("conservation", "spiral"):
        if key not in summary:
            raise SchemaError(f"{path}: missing top-level key {key!r}")
    return summary


def read_t22_csv(path):
    """T22 map -> (thetas, times, complex values (n_theta, n_t))."""
    _require(path)
    raw = np.genfromtxt(path, delimiter=",", names=True)
    names = raw.dtype.names
    expected = tuple(T22_HEADER.split(","))
    if names != expected:
        raise SchemaError(f"{path}: columns {names}, expected {expected}")
    thetas = np.unique(raw["theta_rad"])
    times = np.unique(raw["t_fs"])
    if len(raw) != len(thetas) * len(times):
        raise SchemaError(
            f"{path}: {len(raw)} rows does not factor into "
            f"{len(thetas)} thetas x {len(times)} times")
    values = (raw["re_t22"] + 1j * raw["im_t22"]).reshape(
        len(thetas), len(times))
    return thetas, times, values


def read_apt_grid(directory):
    """Cartesian APT export -> (meta dict, array (n_t, n_y, n_x, 2))."""
    meta_path = _require(os.path.join(directory, "timedomain",
                                      "apt_grid.meta.json"))
    bin_path = _require(os.path.join(directory, "timedomain",
                                     "apt_grid.bin"))
    with open(meta_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    for key in ("shape", "dtype", "fields", "axes"):
        if key not in meta:
            raise SchemaError(f"{meta_path}: missing key {key!r}")
    if meta["fields"] != ["intensity", "orientation"]:
        raise SchemaError(
            f"{meta_path}: fields {meta['fields']}, expected "
            "['intensity', 'orientation']")
    raw = np.fromfile(bin_path, dtype=meta["dtype"])
    expected_size = int(np.prod(meta["shape"]))
    if raw.size != expected_size:
        raise SchemaError(
            f"{bin_path}: {raw.size} values, expected {expected_size} "
            f"for shape {meta['shape']}")
    return meta, raw.reshape(meta["shape"])


def run_paths(directory):
    return {
        "oam": os.path.join(directory, "spectra", "oam.csv"),
        "tkam": os.path.join(directory, "spectra", "tkam.csv"),
        "summary": os.path.join(directory, "summary.json"),
        "t22": os.path.join(directory, "timedomain", "t22.csv"),
    }
