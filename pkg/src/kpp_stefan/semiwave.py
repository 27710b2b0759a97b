"""Semi-wave profiles and the spreading speed via the Stefan slope condition.

The profile q solves  q'' - c q' - d q + f(q(z - c*tau)) = 0  on z > 0 with
q = 0 for z <= 0 and q -> ustar.  We relax the parabolic analogue

    v_t = v_zz - c v_z - d v + f(v(t, z - c*tau))

on a truncated interval [0, L] with v(t, 0) = 0, v(t, L) = ustar, starting
from the constant supersolution ustar.  Because f is nondecreasing and the
implicit linear operator is an M-matrix, the iterates decrease pointwise and
converge to the maximal steady state; the delay offset is read by linear
interpolation with zero extension behind the front.

The spreading speed cstar is the unique root of

    eta(c) = q_c'(0+) - c / mu

on (0, c0(tau)), located by bisection on the sign of eta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.sparse import csc_matrix, diags
from scipy.sparse.linalg import splu

from .characteristic import c0
from .errors import BracketFailure, NotConverged, TruncationSuspect
from .model import ProblemSpec, eval_f

# The explicit reaction update v + dt*(f(shift v) - d*v) is order-preserving
# iff dt*d <= 1; the implicit diffusion/advection solve is unconditionally
# stable, so the pseudo-time step is limited by the reaction alone.
_DT_SAFETY = 0.8


@dataclass(frozen=True)
class SemiWaveNumerics:
    """Discretization and stopping parameters for profile relaxation."""

    L: Optional[float] = None          # truncation length; auto when None
    dz: Optional[float] = None         # grid spacing; auto: L/2000
    relax_tol: float = 1e-9            # sup-norm defect of the steady equation
    max_steps: int = 400_000
    dt: Optional[float] = None         # pseudo-time step; auto when None
    defect_check_every: int = 50
    monotone_check_every: int = 100
    bracket_rtol: float = 1e-6         # cstar bisection width, relative to c0
    check_truncation: bool = False     # re-solve at 2L and compare slopes


@dataclass(frozen=True)
class SemiWaveProfile:
    """Converged discrete profile on z in [0, L] (q = 0 understood for z <= 0)."""

    c: float
    tau: float
    L: float
    dz: float
    q: np.ndarray = field(repr=False)
    qprime0: float
    residual: float

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.q.size)

    def evaluate(self, z) -> np.ndarray:
        """Profile extended by 0 behind the front and by q(L) past L."""
        zq = self.grid()
        return np.interp(np.asarray(z, dtype=float), zq, self.q, left=0.0, right=float(self.q[-1]))


@dataclass(frozen=True)
class SpeedResult:
    mu: float
    tau: float
    cstar: float
    c0: float
    profile: SemiWaveProfile
    eta_residual: float


@dataclass(frozen=True)
class SpeedPoint:
    axis_value: float
    result: Optional[SpeedResult]
    error: Optional[str] = None


@dataclass(frozen=True)
class SpeedCurveResult:
    axis: str
    points: tuple
    verdict: str


def default_length(spec: ProblemSpec, c: float) -> float:
    gap = spec.reaction.fprime0 - spec.reaction.d
    return max(40.0, 20.0 * c * spec.tau + 40.0 / math.sqrt(gap))


def _default_dt(spec: ProblemSpec) -> float:
    return _DT_SAFETY / spec.reaction.d


def _steady_defect(spec: ProblemSpec, c: float, z: np.ndarray, v: np.ndarray, dz: float) -> float:
    interior = slice(1, -1)
    d2 = (v[:-2] - 2.0 * v[1:-1] + v[2:]) / (dz * dz)
    d1 = (v[2:] - v[:-2]) / (2.0 * dz)
    shifted = np.interp(z[interior] - c * spec.tau, z, v, left=0.0)
    rhs = eval_f(spec.reaction, shifted) - spec.reaction.d * v[interior]
    return float(np.max(np.abs(d2 - c * d1 + rhs)))


def solve_profile(
    spec: ProblemSpec,
    c: float,
    L: Optional[float] = None,
    dz: Optional[float] = None,
    relax_tol: float = 1e-9,
    max_steps: int = 400_000,
    dt: Optional[float] = None,
    defect_check_every: int = 50,
    monotone_check_every: int = 100,
    check_truncation: bool = False,
) -> SemiWaveProfile:
    """Relax the truncated semi-wave problem to its maximal steady state.

    Raises NotConverged when the defect does not reach relax_tol within
    max_steps, and TruncationSuspect when the optional L-doubling control
    moves the boundary slope by more than 10*relax_tol.
    """
    if c < 0:
        raise ValueError("need c >= 0")
    reaction = spec.reaction
    ustar = reaction.ustar
    if L is None:
        L = default_length(spec, c)
    if L < 10.0 * max(1.0, c * spec.tau):
        raise ValueError(f"truncation length {L} too short for c*tau = {c * spec.tau}")
    if dz is None:
        dz = L / 2000.0
    if dz > L / 200.0:
        raise ValueError(f"dz = {dz} too coarse (need <= L/200)")
    if dt is None:
        dt = _default_dt(spec)
    if dt * reaction.d > 1.0:
        raise ValueError("dt*d > 1 breaks the monotone reaction update")

    n = int(round(L / dz))
    dz = L / n
    z = np.linspace(0.0, L, n + 1)

    # Implicit operator (I - dt*(D2 - c D1)) on the interior nodes, factored once.
    lower = dt * (1.0 / dz**2 + c / (2.0 * dz))
    upper = dt * (1.0 / dz**2 - c / (2.0 * dz))
    diag = 1.0 + 2.0 * dt / dz**2
    m = n - 1
    A = diags(
        [np.full(m - 1, -lower), np.full(m, diag), np.full(m - 1, -upper)],
        offsets=[-1, 0, 1],
        format="csc",
    )
    solver = splu(csc_matrix(A))

    v = np.full(n + 1, ustar)
    v[0] = 0.0
    shift = z[1:-1] - c * spec.tau
    v_checkpoint = v.copy()
    residual = math.inf
    d = reaction.d
    for step in range(1, max_steps + 1):
        shifted = np.interp(shift, z, v, left=0.0)
        rhs = v[1:-1] + dt * (eval_f(reaction, shifted) - d * v[1:-1])
        rhs[-1] += upper * ustar
        v[1:-1] = solver.solve(rhs)
        if step % monotone_check_every == 0:
            if np.max(v - v_checkpoint) > 1e-10:
                raise NotConverged(
                    "relaxation iterates stopped decreasing; monotone descent from "
                    "the supersolution is broken (bug signal)"
                )
            v_checkpoint = v.copy()
        if step % defect_check_every == 0:
            residual = _steady_defect(spec, c, z, v, dz)
            if residual < relax_tol:
                break
    else:
        raise NotConverged(
            f"defect {residual:.3e} > {relax_tol} after {max_steps} relaxation steps"
        )

    if np.min(v) < -1e-10 or np.max(v) > ustar + 1e-8:
        raise NotConverged("converged profile leaves [0, ustar]")

    qprime0 = (4.0 * v[1] - v[2]) / (2.0 * dz)
    profile = SemiWaveProfile(
        c=c, tau=spec.tau, L=L, dz=dz, q=v.copy(), qprime0=float(qprime0), residual=residual
    )
    if check_truncation:
        wide = solve_profile(
            spec, c, L=2.0 * L, dz=dz, relax_tol=relax_tol, max_steps=max_steps,
            dt=dt, defect_check_every=defect_check_every,
            monotone_check_every=monotone_check_every, check_truncation=False,
        )
        if abs(wide.qprime0 - profile.qprime0) > 10.0 * relax_tol:
            raise TruncationSuspect(
                f"slope moved by {abs(wide.qprime0 - profile.qprime0):.3e} when doubling L={L}"
            )
    return profile


def _profile_kwargs(numerics: SemiWaveNumerics) -> dict:
    return dict(
        L=numerics.L,
        dz=numerics.dz,
        relax_tol=numerics.relax_tol,
        max_steps=numerics.max_steps,
        dt=numerics.dt,
        defect_check_every=numerics.defect_check_every,
        monotone_check_every=numerics.monotone_check_every,
        check_truncation=numerics.check_truncation,
    )


def eta(spec: ProblemSpec, c: float, numerics: SemiWaveNumerics = SemiWaveNumerics()) -> float:
    """Boundary-slope excess q_c'(0+) - c/mu, strictly decreasing in c."""
    profile = solve_profile(spec, c, **_profile_kwargs(numerics))
    return profile.qprime0 - c / spec.mu


def cstar(spec: ProblemSpec, numerics: SemiWaveNumerics = SemiWaveNumerics()) -> SpeedResult:
    """Spreading speed: the sign change of eta on (0, c0(tau)), by bisection.

    Only the sign of eta is consulted, never its magnitude, so slope noise
    near c0 cannot bias the bracket.
    """
    reaction = spec.reaction
    c0_val = c0(spec.tau, reaction.fprime0, reaction.d)
    lo = 0.0
    hi = c0_val * (1.0 - 1e-6)
    if eta(spec, lo, numerics) <= 0.0:
        raise BracketFailure("eta(0) <= 0: numerics too coarse to resolve the slope at c=0")
    if eta(spec, hi, numerics) >= 0.0:
        raise BracketFailure(
            f"eta({hi}) >= 0 just below c0={c0_val}: profile decay unresolved"
        )
    tol = numerics.bracket_rtol * c0_val
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if eta(spec, mid, numerics) > 0.0:
            lo = mid
        else:
            hi = mid
    c_star = 0.5 * (lo + hi)
    profile = solve_profile(spec, c_star, **_profile_kwargs(numerics))
    return SpeedResult(
        mu=spec.mu,
        tau=spec.tau,
        cstar=c_star,
        c0=c0_val,
        profile=profile,
        eta_residual=abs(profile.qprime0 - c_star / spec.mu),
    )


def _monotone_verdict(values, increasing: bool) -> str:
    diffs = np.diff(values)
    ok = np.all(diffs > 0) if increasing else np.all(diffs < 0)
    word = "increasing" if increasing else "decreasing"
    return f"strictly {word}" if ok else f"NOT strictly {word}"


def speed_curve(
    spec_template: ProblemSpec,
    axis: str,
    values,
    numerics: SemiWaveNumerics = SemiWaveNumerics(),
) -> SpeedCurveResult:
    """One cstar solve per axis value; per-point failures are recorded, not fatal."""
    if axis not in ("tau", "mu"):
        raise ValueError(f"axis must be 'tau' or 'mu', got {axis!r}")
    values = [float(v) for v in values]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("values must be sorted ascending")
    points = []
    for v in values:
        spec = replace(spec_template, **{axis: v})
        try:
            points.append(SpeedPoint(axis_value=v, result=cstar(spec, numerics)))
        except Exception as exc:  # recorded per point
            points.append(SpeedPoint(axis_value=v, result=None, error=f"{type(exc).__name__}: {exc}"))
    ok_points = [p for p in points if p.result is not None]
    if len(ok_points) >= 2:
        speeds = [p.result.cstar for p in ok_points]
        verdict = _monotone_verdict(speeds, increasing=(axis == "mu"))
    else:
        verdict = "insufficient points"
    return SpeedCurveResult(axis=axis, points=tuple(points), verdict=verdict)
