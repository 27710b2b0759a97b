"""Command-line entry point.

Subcommands: simulate, semiwave, speeds, characteristic, classify, compare.
Each takes --config <path> (TOML) and --out <dir>; scalar config keys may be
overridden with repeated --set section.key=value flags.  Exit codes: 0 on
success, 1 on domain errors (validation, non-convergence), 2 on usage errors.
Data files contain no wall-clock content, so identical configs give
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import csvio, diagnostics
from .characteristic import c0, complex_root_in_omega, delta, min_real_root, CharacteristicQuery
from .errors import KppStefanError
from .fbsolver import NumericsConfig, init_state, run
from .model import ProblemSpec, RawHistory, make_cosine_history, make_reaction, validate_history
from .semiwave import (
    SemiWaveNumerics,
    SpeedPoint,
    SpeedCurveResult,
    _monotone_verdict,
    cstar,
    solve_profile,
)

SUBCOMMANDS = ("simulate", "semiwave", "speeds", "characteristic", "classify", "compare")


class UsageError(Exception):
    pass


def _load_config(path: Path, overrides) -> dict:
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    for item in overrides or ():
        if "=" not in item:
            raise UsageError(f"--set needs key=value, got {item!r}")
        key, text = item.split("=", 1)
        parts = key.split(".")
        node = cfg
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise UsageError(f"--set {key}: section {part!r} not in config")
            node = node[part]
        leaf = parts[-1]
        if leaf not in node:
            raise UsageError(f"--set {key}: key not present in config")
        old = node[leaf]
        if isinstance(old, dict) or isinstance(old, list):
            raise UsageError(f"--set {key}: only scalar keys may be overridden")
        if isinstance(old, bool):
            node[leaf] = text.lower() in ("1", "true", "yes")
        elif isinstance(old, int) and not isinstance(old, bool):
            node[leaf] = int(text)
        elif isinstance(old, float):
            node[leaf] = float(text)
        else:
            node[leaf] = text
    return cfg


def _build_spec(cfg: dict) -> ProblemSpec:
    prob = cfg.get("problem")
    if not isinstance(prob, dict):
        raise UsageError("config needs a [problem] section")
    family = prob.get("family", "beverton_holt")
    d = float(prob.get("d", 1.0))
    if family == "beverton_holt":
        params = {"p": float(prob.get("p", 2.0)), "q": float(prob.get("q", 1.0))}
    elif family == "logistic_death":
        params = {"r": float(prob.get("r", 1.0))}
    elif family == "stage_structured":
        params = {
            "b_family": prob.get("b_family", "beverton_holt"),
            "b_params": {"p": float(prob.get("b_p", 2.0)), "q": float(prob.get("b_q", 1.0))},
            "d_I": float(prob.get("d_I", 0.5)),
            "tau": float(prob.get("tau", 0.0)),
        }
    else:
        raise UsageError(f"unknown reaction family {family!r}")
    reaction = make_reaction(family, params, d)
    return ProblemSpec(reaction=reaction, tau=float(prob.get("tau", 0.0)), mu=float(prob.get("mu", 1.0)))


def _build_history(spec: ProblemSpec, cfg: dict):
    init = cfg.get("initial")
    if not isinstance(init, dict):
        raise UsageError("config needs an [initial] section")
    kind = init.get("kind", "cosine")
    if kind == "cosine":
        raw = make_cosine_history(
            g0=float(init["g0"]),
            h0=float(init["h0"]),
            amplitude=float(init.get("amplitude", 0.5)),
            tau=spec.tau,
            n_theta=int(init.get("n_theta", 5)),
            n_x=int(init.get("n_x", 201)),
        )
    elif kind == "csv":
        raw = csvio.read_history_csv(init["bounds_csv"], init["phi_csv"])
    else:
        raise UsageError(f"unknown initial kind {kind!r}")
    return validate_history(spec, raw)


def _build_numerics(cfg: dict) -> NumericsConfig:
    num = cfg.get("numerics", {})
    return NumericsConfig(
        n_cells=int(num.get("n_cells", 400)),
        dt=float(num["dt"]) if "dt" in num else None,
        boundary_stencil_order=int(num.get("boundary_stencil_order", 2)),
        t_end=float(num.get("t_end", 10.0)),
        snapshot_every=float(num["snapshot_every"]) if "snapshot_every" in num else None,
        max_tau_steps=int(num.get("max_tau_steps", 20000)),
    )


def _semiwave_numerics(cfg: dict) -> SemiWaveNumerics:
    sw = cfg.get("semiwave", {})
    return SemiWaveNumerics(
        L=float(sw["L"]) if "L" in sw else None,
        dz=float(sw["dz"]) if "dz" in sw else None,
        relax_tol=float(sw.get("relax_tol", 1e-9)),
        max_steps=int(sw.get("max_steps", 400_000)),
        dt=float(sw["dt"]) if "dt" in sw else None,
        bracket_rtol=float(sw.get("bracket_rtol", 1e-6)),
        check_truncation=bool(sw.get("check_truncation", False)),
    )


def _echo(path: Path) -> None:
    print(str(path))


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _plan(out_dir: Path, description: dict) -> int:
    print(json.dumps({"plan": description, "out_dir": str(out_dir)}, indent=2, sort_keys=True, default=str))
    return 0


def _cmd_simulate(cfg: dict, out_dir: Path, dry_run: bool, classify_only: bool = False) -> int:
    spec = _build_spec(cfg)
    history = _build_history(spec, cfg)
    numerics = _build_numerics(cfg)
    th = cfg.get("classify", {})
    thresholds = diagnostics.Thresholds(
        eps_vanish=float(th.get("eps_vanish", diagnostics.DEFAULT_EPS_VANISH)),
        length_cap_slack=float(th.get("length_cap_slack", diagnostics.LENGTH_CAP_SLACK)),
    )
    if dry_run:
        return _plan(out_dir, {
            "command": "classify" if classify_only else "simulate",
            "tau": spec.tau, "mu": spec.mu, "family": spec.reaction.family_id,
            "ustar": spec.reaction.ustar, "n_cells": numerics.n_cells,
            "dt": numerics.dt, "t_end": numerics.t_end,
            "length_threshold": diagnostics.spreading_length_threshold(spec),
        })

    state = init_state(spec, history, numerics)
    observers = []
    if classify_only and bool(th.get("stop_early", True)):
        threshold = diagnostics.spreading_length_threshold(spec)
        cap = threshold * (1.0 + thresholds.length_cap_slack)

        def verdict_reached(st) -> bool:
            if st.h - st.g >= threshold:
                return True
            import numpy as _np
            return float(_np.max(st.w)) < thresholds.eps_vanish and st.h - st.g < cap

        observers.append(verdict_reached)
    traj = run(state, spec, numerics, observers=observers)
    verdict = diagnostics.classify(traj, spec, thresholds)

    out_dir.mkdir(parents=True, exist_ok=True)
    traj_path = out_dir / "trajectory.csv"
    csvio.write_trajectory(traj_path, traj)
    _echo(traj_path)
    snap_path = out_dir / "snapshots.csv"
    csvio.write_snapshots(snap_path, traj.snapshots)
    _echo(snap_path)

    measured = None
    if traj.t[-1] - traj.t[0] >= 20.0:
        measured = diagnostics.front_speed(traj)
    notes = []

    if not classify_only and cfg.get("profile_check", {}).get("enabled", False):
        sw_numerics = _semiwave_numerics(cfg)
        speed = cstar(spec, sw_numerics)
        diagnostics.require_spreading(verdict)
        drift = diagnostics.drift_offsets(traj, speed.cstar)
        series = [
            (s.t, diagnostics.profile_error(s, speed.profile, drift.H1))
            for s in traj.snapshots
            if s.t >= 0.5 * traj.t[-1]
        ]
        err_path = out_dir / "profile_error.csv"
        csvio.write_profile_error_series(err_path, series)
        _echo(err_path)
        notes.append(f"cstar={speed.cstar}")
        notes.append(f"H1={drift.H1}")
        notes.append(f"G1={drift.G1}")

    summary = {
        "verdict": verdict.kind,
        "evidence": verdict.evidence,
        "t_end": float(traj.t[-1]),
        "final_g": float(traj.g[-1]),
        "final_h": float(traj.h[-1]),
        "measured_speed": measured,
        "notes": notes,
    }
    summary_path = out_dir / ("verdict.json" if classify_only else "summary.json")
    _write_json(summary_path, summary)
    _echo(summary_path)
    return 0


def _cmd_semiwave(cfg: dict, out_dir: Path, dry_run: bool) -> int:
    spec = _build_spec(cfg)
    sw = cfg.get("semiwave", {})
    c = float(sw.get("c", 0.0))
    numerics = _semiwave_numerics(cfg)
    if dry_run:
        return _plan(out_dir, {
            "command": "semiwave", "c": c, "tau": spec.tau,
            "L": numerics.L, "dz": numerics.dz, "relax_tol": numerics.relax_tol,
        })
    profile = solve_profile(
        spec, c,
        L=numerics.L, dz=numerics.dz, relax_tol=numerics.relax_tol,
        max_steps=numerics.max_steps, dt=numerics.dt,
        check_truncation=numerics.check_truncation,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "profile.csv"
    csvio.write_profile(path, profile)
    _echo(path)
    print(f"qprime0 {profile.qprime0!r}")
    return 0


def _worker_count() -> int:
    raw = os.environ.get("KPP_STEFAN_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"KPP_STEFAN_THREADS must be an integer, got {raw!r}")


def _cmd_speeds(cfg: dict, out_dir: Path, dry_run: bool) -> int:
    spec = _build_spec(cfg)
    sp = cfg.get("speeds")
    if not isinstance(sp, dict):
        raise UsageError("config needs a [speeds] section")
    axis = sp.get("axis", "tau")
    values = [float(v) for v in sp.get("values", [])]
    if axis not in ("tau", "mu"):
        raise UsageError(f"speeds.axis must be tau or mu, got {axis!r}")
    if not values:
        raise UsageError("speeds.values is empty")
    numerics = _semiwave_numerics(cfg)
    workers = _worker_count()
    if dry_run:
        return _plan(out_dir, {"command": "speeds", "axis": axis, "values": values, "workers": workers})

    from dataclasses import replace

    def solve_one(v: float) -> SpeedPoint:
        point_spec = replace(spec, **{axis: v})
        try:
            return SpeedPoint(axis_value=v, result=cstar(point_spec, numerics))
        except Exception as exc:
            return SpeedPoint(axis_value=v, result=None, error=f"{type(exc).__name__}: {exc}")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(solve_one, values))
    else:
        points = [solve_one(v) for v in values]
    ok = [p for p in points if p.result is not None]
    verdict = (
        _monotone_verdict([p.result.cstar for p in ok], increasing=(axis == "mu"))
        if len(ok) >= 2
        else "insufficient points"
    )
    curve = SpeedCurveResult(axis=axis, points=tuple(points), verdict=verdict)

    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for p in curve.points:
        if p.result is None:
            print(f"point {p.axis_value} failed: {p.error}", file=sys.stderr)
            continue
        r = p.result
        rows.append((p.axis_value, r.c0, r.cstar, r.profile.qprime0, r.eta_residual))
    path = out_dir / "speeds.csv"
    csvio.write_speeds(path, rows)
    _echo(path)
    print(f"monotonicity {curve.verdict}")
    return 0


def _cmd_characteristic(cfg: dict, out_dir: Path, dry_run: bool) -> int:
    spec = _build_spec(cfg)
    ch = cfg.get("characteristic", {})
    taus = [float(v) for v in ch.get("taus", [spec.tau])]
    c_factor = float(ch.get("c_factor", 0.5))
    fprime0, d = spec.reaction.fprime0, spec.reaction.d
    if dry_run:
        return _plan(out_dir, {"command": "characteristic", "taus": taus, "c_factor": c_factor})
    rows = []
    for tau in taus:
        c0_val = c0(tau, fprime0, d)
        c = ch["c"] if "c" in ch else c_factor * c0_val
        if tau == 0.0 or c * tau == 0.0:
            disc = 4.0 * (fprime0 - d) - c * c
            if disc >= 0:
                alpha, beta = 0.5 * c, 0.5 * math.sqrt(disc)
            else:
                lam = min_real_root(CharacteristicQuery(c=c, tau=tau, fprime0=fprime0, d=d))
                alpha, beta = float(lam), 0.0
            resid = abs(delta(CharacteristicQuery(c=c, tau=tau, fprime0=fprime0, d=d), complex(alpha, beta)))
        elif c < c0_val:
            root = complex_root_in_omega(c, tau, fprime0, d)
            alpha, beta, resid = root.alpha, root.beta, root.residual
        else:
            lam = min_real_root(CharacteristicQuery(c=c, tau=tau, fprime0=fprime0, d=d))
            alpha, beta = float(lam), 0.0
            resid = abs(delta(CharacteristicQuery(c=c, tau=tau, fprime0=fprime0, d=d), complex(alpha, beta)))
        rows.append((tau, c0_val, c, alpha, beta, resid))
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "characteristic.csv"
    csvio.write_characteristic(path, rows)
    _echo(path)
    return 0


def _cmd_compare(cfg: dict, out_dir: Path, dry_run: bool) -> int:
    cp = cfg.get("compare")
    if not isinstance(cp, dict):
        raise UsageError("config needs a [compare] section")
    run_a, run_b = Path(cp["run_a"]), Path(cp["run_b"])
    tol = float(cp.get("tol", 1e-6))
    if dry_run:
        return _plan(out_dir, {"command": "compare", "run_a": run_a, "run_b": run_b, "tol": tol})
    for base in (run_a, run_b):
        for name in ("trajectory.csv", "snapshots.csv"):
            if not (base / name).exists():
                raise UsageError(f"missing artifact {base / name}")
    traj_a = csvio.read_trajectory(run_a / "trajectory.csv")
    traj_b = csvio.read_trajectory(run_b / "trajectory.csv")
    snaps_a = csvio.read_snapshots(run_a / "snapshots.csv")
    snaps_b = csvio.read_snapshots(run_b / "snapshots.csv")
    report = diagnostics.compare_runs(traj_a, traj_b, snaps_a, snaps_b, tol=tol)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "compare.json"
    _write_json(path, report)
    _echo(path)
    return 0


def run_command(argv) -> int:
    parser = argparse.ArgumentParser(
        prog="kpp-stefan",
        description="Solver suite for the delayed Fisher-KPP free-boundary problem",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--dry-run", action="store_true")
        p.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE")
    args = parser.parse_args(argv)

    try:
        cfg = _load_config(args.config, args.overrides)
        out_dir = args.out
        if out_dir is None:
            out_dir = Path(cfg.get("outputs", {}).get("directory", "."))
        handlers = {
            "simulate": lambda: _cmd_simulate(cfg, out_dir, args.dry_run),
            "classify": lambda: _cmd_simulate(cfg, out_dir, args.dry_run, classify_only=True),
            "semiwave": lambda: _cmd_semiwave(cfg, out_dir, args.dry_run),
            "speeds": lambda: _cmd_speeds(cfg, out_dir, args.dry_run),
            "characteristic": lambda: _cmd_characteristic(cfg, out_dir, args.dry_run),
            "compare": lambda: _cmd_compare(cfg, out_dir, args.dry_run),
        }
        return handlers[args.command]()
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (KppStefanError, ValueError, KeyError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
