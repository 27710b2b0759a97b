"""CSV readers/writers for the artifacts exchanged between subcommands.

Floats are written with repr (shortest round-trip form), so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .fbsolver import Snapshot, Trajectory
from .model import RawHistory
from .semiwave import SemiWaveProfile

TRAJECTORY_HEADER = ["t", "g", "h", "gprime", "hprime", "sup_u"]
PROFILE_HEADER = ["z", "q"]
SPEEDS_HEADER = ["axis_value", "c0", "cstar", "qprime0", "eta_residual"]
CHARACTERISTIC_HEADER = ["tau", "c0", "c", "alpha", "beta", "residual"]
PROFILE_ERROR_HEADER = ["t", "error"]


def _fmt(x) -> str:
    return repr(float(x))


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_trajectory(path, traj: Trajectory) -> None:
    _write_rows(
        path,
        TRAJECTORY_HEADER,
        zip(traj.t, traj.g, traj.h, traj.gprime, traj.hprime, traj.sup_u),
    )


def read_trajectory(path) -> Trajectory:
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    return Trajectory(
        t=data["t"],
        g=data["g"],
        h=data["h"],
        gprime=data["gprime"],
        hprime=data["hprime"],
        sup_u=data["sup_u"],
        snapshots=[],
    )


def write_snapshots(path, snapshots) -> None:
    if not snapshots:
        raise ValueError("no snapshots to write")
    n = snapshots[0].w.size - 1
    header = ["t", "g", "h"] + [f"w_{j}" for j in range(n + 1)]
    rows = ([s.t, s.g, s.h] + list(s.w) for s in snapshots)
    _write_rows(path, header, rows)


def read_snapshots(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["t", "g", "h"]:
            raise ValueError(f"snapshot CSV must start with t,g,h; got {header[:3]}")
        out = []
        for row in reader:
            vals = [float(v) for v in row]
            out.append(Snapshot(t=vals[0], g=vals[1], h=vals[2], w=np.asarray(vals[3:])))
    return out


def write_profile(path, profile: SemiWaveProfile) -> None:
    _write_rows(path, PROFILE_HEADER, zip(profile.grid(), profile.q))


def write_speeds(path, rows) -> None:
    _write_rows(path, SPEEDS_HEADER, rows)


def write_characteristic(path, rows) -> None:
    _write_rows(path, CHARACTERISTIC_HEADER, rows)


def write_profile_error_series(path, rows) -> None:
    _write_rows(path, PROFILE_ERROR_HEADER, rows)


def read_history_csv(bounds_path, phi_path) -> RawHistory:
    """Load a history from a theta,g,h CSV plus a theta,x,phi sample CSV."""
    bounds = np.genfromtxt(bounds_path, delimiter=",", names=True)
    bounds = np.atleast_1d(bounds)
    for col in ("theta", "g", "h"):
        if col not in (bounds.dtype.names or ()):
            raise ValueError(f"bounds CSV missing column {col!r}")
    samples = np.genfromtxt(phi_path, delimiter=",", names=True)
    samples = np.atleast_1d(samples)
    for col in ("theta", "x", "phi"):
        if col not in (samples.dtype.names or ()):
            raise ValueError(f"phi CSV missing column {col!r}")

    thetas = bounds["theta"]
    phi = []
    for i, th in enumerate(thetas):
        sel = np.abs(samples["theta"] - th) < 1e-12
        if not np.any(sel):
            raise ValueError(f"no phi samples for theta={th}")
        x = samples["x"][sel]
        v = samples["phi"][sel]
        order = np.argsort(x)
        x, v = x[order], v[order]
        g_i, h_i = bounds["g"][i], bounds["h"][i]
        if abs(x[0] - g_i) > 1e-9 or abs(x[-1] - h_i) > 1e-9:
            raise ValueError(
                f"phi samples at theta={th} must span [{g_i}, {h_i}]; got [{x[0]}, {x[-1]}]"
            )
        grid = np.linspace(g_i, h_i, x.size)
        vals = np.interp(grid, x, v)
        vals[0] = v[0]
        vals[-1] = v[-1]
        phi.append(vals)
    return RawHistory(thetas=thetas, g_hist=bounds["g"], h_hist=bounds["h"], phi=phi)
