#!/usr/bin/env python3
"""Render publication-style figures from the solver's CSV artifacts.

Usage:  plots.py <kind> <csv...> -o <png> [options]

Figure kinds and the CSV schemas they read:
  fronts              trajectory CSV (t,g,h,gprime,hprime,sup_u); optional
                      --cstar/--offset draw the c*t +- C guide lines
  profile_overlay     snapshot CSV (t,g,h,w_0..w_n) + semi-wave CSV (z,q);
                      overlays u(t,.) with the front-aligned profile
  speed_curve         speeds CSV (axis_value,c0,cstar,qprime0,eta_residual)
  classification_map  one or more trajectory CSVs: habitat length vs time
                      against the dichotomy threshold line (--threshold)

Output is always raster (PNG, 150 dpi by default); an existing output path
gets a numeric suffix instead of being overwritten.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

KINDS = ("fronts", "profile_overlay", "speed_curve", "classification_map")

TRAJECTORY_COLUMNS = ["t", "g", "h", "gprime", "hprime", "sup_u"]
PROFILE_COLUMNS = ["z", "q"]
SPEEDS_COLUMNS = ["axis_value", "c0", "cstar", "qprime0", "eta_residual"]
SNAPSHOT_PREFIX = ["t", "g", "h"]  # followed by w_0..w_n


class SchemaMismatch(Exception):
    """Input CSV does not carry the columns the figure kind needs."""


@dataclass
class FigureSpec:
    kind: str
    inputs: Sequence[Path]
    output: Path
    dpi: int = 150
    threshold: Optional[float] = None
    cstar: Optional[float] = None
    offset: float = 0.0
    xlim: Optional[tuple] = None
    ylim: Optional[tuple] = None
    title: Optional[str] = None
    labels: Sequence[str] = field(default_factory=tuple)

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise SchemaMismatch(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        if not self.inputs:
            raise SchemaMismatch("no input CSV given")
        for p in self.inputs:
            if not Path(p).exists():
                raise SchemaMismatch(f"input CSV not found: {p}")


def _read_columns(path: Path, required: Sequence[str]) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaMismatch(f"{path}: empty file")
        for col in required:
            if col not in header:
                raise SchemaMismatch(f"{path}: missing column {col!r}")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.asarray(rows)
    if data.size == 0:
        raise SchemaMismatch(f"{path}: no data rows")
    return {name: data[:, i] for i, name in enumerate(header)}


def _read_snapshots(path: Path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[: len(SNAPSHOT_PREFIX)] != SNAPSHOT_PREFIX:
            missing = SNAPSHOT_PREFIX[0] if not header else next(
                (c for i, c in enumerate(SNAPSHOT_PREFIX) if i >= len(header) or header[i] != c),
                SNAPSHOT_PREFIX[0],
            )
            raise SchemaMismatch(f"{path}: missing column {missing!r}")
        if len(header) < 6 or not header[3].startswith("w_"):
            raise SchemaMismatch(f"{path}: missing column 'w_0'")
        out = []
        for row in reader:
            if not row:
                continue
            vals = [float(v) for v in row]
            out.append((vals[0], vals[1], vals[2], np.asarray(vals[3:])))
    if not out:
        raise SchemaMismatch(f"{path}: no data rows")
    return out


def _unique_path(path: Path) -> Path:
    if not path.exists():
        return path
    stem, suffix = path.stem, path.suffix
    k = 1
    while True:
        candidate = path.with_name(f"{stem}-{k}{suffix}")
        if not candidate.exists():
            return candidate
        k += 1


def _new_axes(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.grid(True, alpha=0.3)
    if spec.title:
        ax.set_title(spec.title)
    return fig, ax


def _finish(fig, ax, spec: FigureSpec) -> Path:
    if spec.xlim:
        ax.set_xlim(*spec.xlim)
    if spec.ylim:
        ax.set_ylim(*spec.ylim)
    ax.legend(loc="best", fontsize=8)
    out = _unique_path(Path(spec.output))
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=spec.dpi)
    plt.close(fig)
    return out


def _label(spec: FigureSpec, i: int, default: str) -> str:
    return spec.labels[i] if i < len(spec.labels) else default


def _fronts(spec: FigureSpec) -> Path:
    data = _read_columns(Path(spec.inputs[0]), TRAJECTORY_COLUMNS)
    fig, ax = _new_axes(spec)
    ax.plot(data["t"], data["h"], color="C0", label="h(t)")
    ax.plot(data["t"], data["g"], color="C1", label="g(t)")
    if spec.cstar is not None:
        t = data["t"]
        ax.plot(t, spec.cstar * t + spec.offset, "k--", lw=0.8, label="c*t + C")
        ax.plot(t, -spec.cstar * t - spec.offset, "k--", lw=0.8)
    if spec.threshold is not None:
        # habitat must outgrow this length for spreading
        ax.axhline(spec.threshold / 2.0, color="0.5", ls=":", lw=0.8, label="threshold/2")
        ax.axhline(-spec.threshold / 2.0, color="0.5", ls=":", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("front position")
    return _finish(fig, ax, spec)


def overlay_residual(snapshot, profile_z, profile_q) -> float:
    """Max gap between the snapshot and the front-aligned profile on the grid."""
    t, g, h, w = snapshot
    x = g + np.linspace(0.0, 1.0, w.size) * (h - g)
    q = np.interp(h - x, profile_z, profile_q, left=0.0, right=profile_q[-1])
    return float(np.max(np.abs(w - q)))


def _profile_overlay(spec: FigureSpec) -> Path:
    if len(spec.inputs) < 2:
        raise SchemaMismatch("profile_overlay needs a snapshot CSV and a profile CSV")
    snaps = _read_snapshots(Path(spec.inputs[0]))
    prof = _read_columns(Path(spec.inputs[1]), PROFILE_COLUMNS)
    t, g, h, w = snaps[-1]
    x = g + np.linspace(0.0, 1.0, w.size) * (h - g)
    q = np.interp(h - x, prof["z"], prof["q"], left=0.0, right=prof["q"][-1])
    resid = overlay_residual(snaps[-1], prof["z"], prof["q"])
    fig, ax = _new_axes(spec)
    ax.plot(x, w, color="C0", label=f"u(t={t:g}, x)")
    ax.plot(x, q, color="C3", ls="--", label="semi-wave (front-aligned)")
    ax.annotate(f"max residual {resid:.3g}", xy=(0.02, 0.95), xycoords="axes fraction", fontsize=8)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    return _finish(fig, ax, spec)


def _speed_curve(spec: FigureSpec) -> Path:
    data = _read_columns(Path(spec.inputs[0]), SPEEDS_COLUMNS)
    fig, ax = _new_axes(spec)
    ax.plot(data["axis_value"], data["cstar"], "o-", color="C0", label="c*")
    ax.plot(data["axis_value"], data["c0"], "s--", color="0.5", lw=0.8, label="c0 (linear bound)")
    ax.set_xlabel(_label(spec, 0, "axis value"))
    ax.set_ylabel("speed")
    return _finish(fig, ax, spec)


def _classification_map(spec: FigureSpec) -> Path:
    fig, ax = _new_axes(spec)
    for i, path in enumerate(spec.inputs):
        data = _read_columns(Path(path), TRAJECTORY_COLUMNS)
        length = data["h"] - data["g"]
        ax.plot(data["t"], length, color=f"C{i}", label=_label(spec, i, Path(path).stem))
    if spec.threshold is not None:
        ax.axhline(spec.threshold, color="k", ls=":", lw=1.0, label="dichotomy threshold")
    ax.set_xlabel("t")
    ax.set_ylabel("habitat length h - g")
    return _finish(fig, ax, spec)


_RENDERERS = {
    "fronts": _fronts,
    "profile_overlay": _profile_overlay,
    "speed_curve": _speed_curve,
    "classification_map": _classification_map,
}


def render(spec: FigureSpec) -> Path:
    """Validate inputs, draw the figure, and return the written image path."""
    spec.validate()
    return _RENDERERS[spec.kind](spec)


def _parse_pair(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected 'lo,hi'")
    return float(parts[0]), float(parts[1])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("csv", nargs="+", type=Path)
    parser.add_argument("-o", "--output", required=True, type=Path)
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--threshold", type=float, default=None)
    parser.add_argument("--cstar", type=float, default=None)
    parser.add_argument("--offset", type=float, default=0.0)
    parser.add_argument("--xlim", type=_parse_pair, default=None)
    parser.add_argument("--ylim", type=_parse_pair, default=None)
    parser.add_argument("--title", default=None)
    parser.add_argument("--label", action="append", default=[], dest="labels")
    args = parser.parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        inputs=args.csv,
        output=args.output,
        dpi=args.dpi,
        threshold=args.threshold,
        cstar=args.cstar,
        offset=args.offset,
        xlim=args.xlim,
        ylim=args.ylim,
        title=args.title,
        labels=args.labels,
    )
    try:
        out = render(spec)
    except SchemaMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(str(out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
