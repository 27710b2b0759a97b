"""Run classification, front-speed and drift estimation, profile comparison.

The spreading verdict uses the rigorous length criterion (once the habitat
reaches pi/sqrt(f'(0)-d) it can never vanish, and the fronts are monotone,
so any recorded crossing is conclusive).  Vanishing at a finite horizon is
necessarily heuristic: we require both decay of the amplitude and a final
length under the theoretical cap.  Undecided is a first-class outcome.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigMismatch, NotSpreading, WindowTooShort
from .fbsolver import Snapshot, Trajectory
from .model import ProblemSpec
from .semiwave import SemiWaveProfile

DEFAULT_EPS_VANISH = 1e-6
LENGTH_CAP_SLACK = 0.05


@dataclass(frozen=True)
class Thresholds:
    eps_vanish: float = DEFAULT_EPS_VANISH
    length_cap_slack: float = LENGTH_CAP_SLACK


@dataclass(frozen=True)
class Verdict:
    kind: str  # Spreading | Vanishing | Undecided
    evidence: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DriftEstimate:
    H1: float
    G1: float
    window: tuple
    slope_residual: float
    max_deviation: float


def spreading_length_threshold(spec: ProblemSpec) -> float:
    """Habitat length beyond which spreading is guaranteed."""
    return math.pi / math.sqrt(spec.reaction.fprime0 - spec.reaction.d)


def classify(
    trajectory: Trajectory,
    spec: ProblemSpec,
    thresholds: Thresholds = Thresholds(),
) -> Verdict:
    """Spreading / Vanishing / Undecided from the recorded time series."""
    if trajectory.t.size == 0:
        raise ValueError("trajectory is empty")
    threshold = spreading_length_threshold(spec)
    lengths = trajectory.h - trajectory.g
    crossing = np.nonzero(lengths >= threshold)[0]
    if crossing.size > 0:
        i = int(crossing[0])
        return Verdict(
            kind="Spreading",
            evidence={
                "length_threshold": threshold,
                "crossing_time": float(trajectory.t[i]),
                "crossing_length": float(lengths[i]),
            },
        )
    final_len = float(lengths[-1])
    final_sup = float(trajectory.sup_u[-1])
    cap = threshold * (1.0 + thresholds.length_cap_slack)
    if final_sup < thresholds.eps_vanish and final_len < cap:
        return Verdict(
            kind="Vanishing",
            evidence={
                "length_threshold": threshold,
                "final_length": final_len,
                "final_sup_u": final_sup,
                "eps_vanish": thresholds.eps_vanish,
            },
        )
    return Verdict(
        kind="Undecided",
        evidence={
            "length_threshold": threshold,
            "final_length": final_len,
            "final_sup_u": final_sup,
            "horizon": float(trajectory.t[-1]),
        },
    )


def front_speed(trajectory: Trajectory, window_fraction: float = 0.5) -> float:
    """Least-squares slope of h(t) over the trailing window."""
    span = float(trajectory.t[-1] - trajectory.t[0])
    if span < 20.0:
        raise WindowTooShort(f"trajectory covers {span} time units; need >= 20")
    t_lo = trajectory.t[-1] - window_fraction * span
    sel = trajectory.t >= t_lo
    t, h = trajectory.t[sel], trajectory.h[sel]
    slope, _ = np.polyfit(t, h, 1)
    return float(slope)


def drift_offsets(
    trajectory: Trajectory,
    cstar: float,
    window_fraction: float = 0.5,
) -> DriftEstimate:
    """Trailing-window means of h(t) - cstar*t and -(g(t) + cstar*t)."""
    span = float(trajectory.t[-1] - trajectory.t[0])
    t_lo = trajectory.t[-1] - window_fraction * span
    if trajectory.t[-1] - t_lo < 10.0:
        raise WindowTooShort("drift window must cover >= 10 time units")
    sel = trajectory.t >= t_lo
    t = trajectory.t[sel]
    right = trajectory.h[sel] - cstar * t
    left = -(trajectory.g[sel] + cstar * t)
    H1 = float(np.mean(right))
    G1 = float(np.mean(left))
    max_dev = float(max(np.max(np.abs(right - H1)), np.max(np.abs(left - G1))))
    measured = front_speed(trajectory, window_fraction) if span >= 20.0 else float("nan")
    return DriftEstimate(
        H1=H1,
        G1=G1,
        window=(float(t[0]), float(t[-1])),
        slope_residual=abs(measured - cstar) if math.isfinite(measured) else float("nan"),
        max_deviation=max_dev,
    )


def require_spreading(verdict: Verdict) -> None:
    if verdict.kind != "Spreading":
        raise NotSpreading(f"verdict is {verdict.kind}, need Spreading")


def profile_error(snapshot: Snapshot, profile: SemiWaveProfile, H1: float) -> float:
    """Sup-norm gap between u(t, .) and the shifted semi-wave on [0, h(t)]."""
    n = snapshot.w.size - 1
    x = snapshot.g + np.linspace(0.0, 1.0, n + 1) * (snapshot.h - snapshot.g)
    sel = x >= 0.0
    x = x[sel]
    u = snapshot.w[sel]
    q = profile.evaluate(profile.c * snapshot.t + H1 - x)
    return float(np.max(np.abs(u - q)))


def _common_times(ta: np.ndarray, tb: np.ndarray, tol: float = 1e-9):
    ia, ib = [], []
    j = 0
    for i, t in enumerate(ta):
        while j < tb.size and tb[j] < t - tol:
            j += 1
        if j < tb.size and abs(tb[j] - t) <= tol:
            ia.append(i)
            ib.append(j)
    return np.asarray(ia, dtype=int), np.asarray(ib, dtype=int)


def _sample_u(snap: Snapshot, x: np.ndarray) -> np.ndarray:
    n = snap.w.size - 1
    xs = snap.g + np.linspace(0.0, 1.0, n + 1) * (snap.h - snap.g)
    return np.interp(x, xs, snap.w, left=0.0, right=0.0)


def compare_runs(
    traj_a: Trajectory,
    traj_b: Trajectory,
    snapshots_a: list,
    snapshots_b: list,
    tol: float = 1e-6,
) -> dict:
    """Check the discrete comparison ordering: A dominates B at all shared times.

    Raises ConfigMismatch when the runs are not comparable (different grids or
    time steps) or when the claimed initial dominance does not hold.
    """
    ia, ib = _common_times(traj_a.t, traj_b.t)
    if ia.size < 0.9 * min(traj_a.t.size, traj_b.t.size):
        raise ConfigMismatch(
            f"runs share only {ia.size} of {min(traj_a.t.size, traj_b.t.size)} sample "
            "times; identical dt configs required"
        )
    if snapshots_a and snapshots_b and snapshots_a[0].w.size != snapshots_b[0].w.size:
        raise ConfigMismatch("runs use different grid sizes")

    # Dominance claim at the shared initial time.
    g_a0, h_a0 = traj_a.g[ia[0]], traj_a.h[ia[0]]
    g_b0, h_b0 = traj_b.g[ib[0]], traj_b.h[ib[0]]
    if g_a0 > g_b0 + 1e-12 or h_a0 < h_b0 - 1e-12:
        raise ConfigMismatch(
            f"initial domain of A [{g_a0}, {h_a0}] does not contain B's [{g_b0}, {h_b0}]"
        )
    if snapshots_a and snapshots_b:
        sa, sb = snapshots_a[0], snapshots_b[0]
        if abs(sa.t - sb.t) < 1e-9:
            xb = sb.g + np.linspace(0.0, 1.0, sb.w.size) * (sb.h - sb.g)
            if np.min(_sample_u(sa, xb) - sb.w) < -1e-12:
                raise ConfigMismatch("initial data of A does not dominate B's")

    worst_h = float(np.min(traj_a.h[ia] - traj_b.h[ib]))
    worst_g = float(np.min(traj_b.g[ib] - traj_a.g[ia]))
    worst_u = math.inf
    checked_u = 0
    for sa in snapshots_a:
        for sb in snapshots_b:
            if abs(sa.t - sb.t) < 1e-9:
                xb = sb.g + np.linspace(0.0, 1.0, sb.w.size) * (sb.h - sb.g)
                worst_u = min(worst_u, float(np.min(_sample_u(sa, xb) - sb.w)))
                checked_u += 1
    report = {
        "n_times": int(ia.size),
        "worst_h_margin": worst_h,
        "worst_g_margin": worst_g,
        "worst_u_margin": worst_u if checked_u else None,
        "n_snapshot_pairs": checked_u,
        "tol": tol,
        "ordered": worst_h >= -tol and worst_g >= -tol and (not checked_u or worst_u >= -tol),
    }
    return report
