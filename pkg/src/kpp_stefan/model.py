"""Reaction families, problem parameters, and validated initial histories.

A reaction family packages the nonlinearity f together with the death rate d
it is coupled to.  Construction runs a battery of numerical structure checks
(dense sampling plus derivative signs) so that everything downstream may
assume: f(0) = 0, f'(0) > d, a unique positive equilibrium ustar with
f(ustar) = d*ustar, f nondecreasing on [0, ustar], and f(s)/s nonincreasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    CompatibleConditionViolation,
    HypothesisViolation,
    RangeViolation,
)

FAMILY_IDS = ("beverton_holt", "logistic_death", "stage_structured")

_CHECK_SAMPLES = 1000


@dataclass(frozen=True)
class ReactionFamily:
    """A validated nonlinearity f with its death rate and equilibrium data."""

    family_id: str
    params: dict
    d: float
    ustar: float
    fprime0: float

    def f(self, s):
        return eval_f(self, s)

    def fprime(self, s):
        return eval_fprime(self, s)

    def lipschitz(self) -> float:
        """Max |f'| on [0, ustar], sampled densely."""
        s = np.linspace(0.0, self.ustar, 1001)
        return float(np.max(np.abs(eval_fprime(self, s))))


@dataclass(frozen=True)
class ProblemSpec:
    """Physical parameters of the free-boundary problem."""

    reaction: ReactionFamily
    tau: float
    mu: float

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.mu <= 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")


@dataclass(frozen=True)
class InitialHistory:
    """Checked initial data (phi, g, h) on theta in [-tau, 0].

    phi[i] holds values on a uniform grid over [g_hist[i], h_hist[i]],
    endpoints included (and equal to zero there).
    """

    thetas: np.ndarray
    g_hist: np.ndarray
    h_hist: np.ndarray
    phi: tuple = field(repr=False)


@dataclass
class RawHistory:
    """Unchecked history input, as read from config or CSV."""

    thetas: Sequence[float]
    g_hist: Sequence[float]
    h_hist: Sequence[float]
    phi: Sequence[np.ndarray]


def _birth_eval(family_id: str, params: dict, s: np.ndarray) -> np.ndarray:
    if family_id == "beverton_holt":
        p, q = params["p"], params["q"]
        return p * s / (1.0 + q * s)
    raise ValueError(f"unknown birth family {family_id!r}")


def _birth_deriv(family_id: str, params: dict, s: np.ndarray) -> np.ndarray:
    if family_id == "beverton_holt":
        p, q = params["p"], params["q"]
        return p / (1.0 + q * s) ** 2
    raise ValueError(f"unknown birth family {family_id!r}")


def _raw_eval(family_id: str, params: dict, d: float, s: np.ndarray) -> np.ndarray:
    if family_id == "beverton_holt":
        p, q = params["p"], params["q"]
        return p * s / (1.0 + q * s)
    if family_id == "logistic_death":
        r = params["r"]
        return (r + d) * s - r * s * s
    if family_id == "stage_structured":
        scale = math.exp(-params["d_I"] * params["tau"])
        return scale * _birth_eval(params["b_family"], params["b_params"], s)
    raise ValueError(f"unknown reaction family {family_id!r}")


def _raw_deriv(family_id: str, params: dict, d: float, s: np.ndarray) -> np.ndarray:
    if family_id == "beverton_holt":
        p, q = params["p"], params["q"]
        return p / (1.0 + q * s) ** 2
    if family_id == "logistic_death":
        r = params["r"]
        return (r + d) - 2.0 * r * s
    if family_id == "stage_structured":
        scale = math.exp(-params["d_I"] * params["tau"])
        return scale * _birth_deriv(params["b_family"], params["b_params"], s)
    raise ValueError(f"unknown reaction family {family_id!r}")


def _analytic_ustar(family_id: str, params: dict, d: float) -> float:
    # Root of f(s) = d*s for each shipped family.
    if family_id == "beverton_holt":
        p, q = params["p"], params["q"]
        return (p / d - 1.0) / q
    if family_id == "logistic_death":
        return 1.0
    if family_id == "stage_structured":
        scale = math.exp(-params["d_I"] * params["tau"])
        p, q = params["b_params"]["p"], params["b_params"]["q"]
        return (scale * p / d - 1.0) / q
    raise ValueError(f"unknown reaction family {family_id!r}")


def eval_f(reaction: ReactionFamily, s):
    """Evaluate f with negative inputs clamped to 0."""
    arr = np.maximum(np.asarray(s, dtype=float), 0.0)
    out = _raw_eval(reaction.family_id, reaction.params, reaction.d, arr)
    if np.isscalar(s) or np.ndim(s) == 0:
        return float(out)
    return out


def eval_fprime(reaction: ReactionFamily, s):
    """Evaluate f' (inputs clamped to 0, matching eval_f)."""
    arr = np.maximum(np.asarray(s, dtype=float), 0.0)
    out = _raw_deriv(reaction.family_id, reaction.params, reaction.d, arr)
    if np.isscalar(s) or np.ndim(s) == 0:
        return float(out)
    return out


def _check_hypothesis(fam: ReactionFamily, n_samples: int) -> None:
    """Verify the structural hypothesis by dense sampling; raise on failure."""
    d, ustar = fam.d, fam.ustar
    if abs(eval_f(fam, 0.0)) > 1e-14:
        raise HypothesisViolation(f"f(0) = {eval_f(fam, 0.0)} != 0")
    if fam.fprime0 - d <= 0:
        raise HypothesisViolation(
            f"f'(0) - d = {fam.fprime0 - d} <= 0 (need a growing low-density state)"
        )
    if not ustar > 0:
        raise HypothesisViolation(f"positive equilibrium missing: ustar = {ustar}")
    resid = abs(eval_f(fam, ustar) - d * ustar)
    if resid > 1e-10 * max(1.0, d * ustar):
        raise HypothesisViolation(f"f(ustar) - d*ustar = {resid} not a root")

    # Uniqueness of the positive root: sign scan of f(s) - d*s on a
    # log-spaced grid spanning well past ustar.
    grid = np.logspace(math.log10(ustar) - 6, math.log10(ustar) + 3, n_samples)
    vals = eval_f(fam, grid) - d * grid
    signs = np.sign(vals)
    crossings = int(np.sum(signs[:-1] * signs[1:] < 0))
    zeros_on_grid = int(np.sum(signs == 0))
    if crossings + zeros_on_grid != 1:
        raise HypothesisViolation(
            f"f(s) - d*s changes sign {crossings + zeros_on_grid} times; need exactly one root"
        )

    smp = np.linspace(0.0, ustar, n_samples)
    der = eval_fprime(fam, smp)
    if np.min(der) < -1e-12:
        raise HypothesisViolation(
            f"f not nondecreasing on [0, ustar]: min f' = {np.min(der)}"
        )
    pos = smp[1:]
    ratio = eval_f(fam, pos) / pos
    if np.max(np.diff(ratio)) > 1e-12:
        raise HypothesisViolation("f(s)/s not nonincreasing on (0, ustar]")


def make_reaction(family_id: str, params: dict, d: float, n_samples: int = _CHECK_SAMPLES) -> ReactionFamily:
    """Build and validate a reaction family.

    Raises HypothesisViolation when any structural check fails.
    """
    if family_id not in FAMILY_IDS:
        raise ValueError(f"unknown reaction family {family_id!r}; choose from {FAMILY_IDS}")
    if d <= 0:
        raise ValueError(f"death rate d must be > 0, got {d}")
    params = dict(params)
    if family_id == "beverton_holt":
        if params.get("p", 0.0) <= 0 or params.get("q", 0.0) <= 0:
            raise ValueError("beverton_holt needs p > 0 and q > 0")
    elif family_id == "logistic_death":
        if params.get("r", 0.0) <= 0:
            raise ValueError("logistic_death needs r > 0")
    elif family_id == "stage_structured":
        if params.get("d_I", -1.0) < 0 or params.get("tau", -1.0) < 0:
            raise ValueError("stage_structured needs d_I >= 0 and tau >= 0")
        params["b_params"] = dict(params["b_params"])

    fprime0 = float(_raw_deriv(family_id, params, d, np.asarray(0.0)))
    if fprime0 - d <= 0:
        # Report before computing ustar, which may be meaningless here.
        raise HypothesisViolation(f"f'(0) - d = {fprime0 - d} <= 0")
    ustar = _analytic_ustar(family_id, params, d)
    fam = ReactionFamily(family_id=family_id, params=params, d=d, ustar=ustar, fprime0=fprime0)
    _check_hypothesis(fam, n_samples)
    return fam


def make_cosine_history(
    g0: float,
    h0: float,
    amplitude: float,
    tau: float,
    n_theta: int = 5,
    n_x: int = 201,
) -> RawHistory:
    """Constant-domain history with a cosine bump vanishing at both fronts."""
    if not h0 > g0:
        raise ValueError("need h0 > g0")
    n_theta = max(1, n_theta) if tau > 0 else 1
    thetas = np.linspace(-tau, 0.0, n_theta if tau > 0 else 1)
    x = np.linspace(g0, h0, n_x)
    mid = 0.5 * (g0 + h0)
    width = h0 - g0
    prof = amplitude * np.cos(math.pi * (x - mid) / width)
    prof[0] = 0.0
    prof[-1] = 0.0
    return RawHistory(
        thetas=thetas,
        g_hist=np.full(len(thetas), g0),
        h_hist=np.full(len(thetas), h0),
        phi=[prof.copy() for _ in thetas],
    )


def validate_history(spec: ProblemSpec, raw: RawHistory) -> InitialHistory:
    """Check a raw history against the initial-data requirements.

    Raises CompatibleConditionViolation if some historical habitat is not
    nested in the initial one, RangeViolation if phi leaves (0, ustar] inside
    or is nonzero at a front.
    """
    thetas = np.asarray(raw.thetas, dtype=float)
    g_hist = np.asarray(raw.g_hist, dtype=float)
    h_hist = np.asarray(raw.h_hist, dtype=float)
    if thetas.size == 0:
        raise ValueError("history is empty")
    if thetas.size != g_hist.size or thetas.size != h_hist.size or thetas.size != len(raw.phi):
        raise ValueError("history arrays have mismatched lengths")
    if np.any(np.diff(thetas) <= 0) and thetas.size > 1:
        raise ValueError("thetas must be strictly increasing")
    if abs(thetas[-1]) > 1e-12:
        raise ValueError(f"last theta must be 0, got {thetas[-1]}")
    if abs(thetas[0] + spec.tau) > 1e-9:
        raise ValueError(f"first theta must be -tau = {-spec.tau}, got {thetas[0]}")

    g0, h0 = g_hist[-1], h_hist[-1]
    ustar = spec.reaction.ustar
    phi_out = []
    for i, theta in enumerate(thetas):
        g, h = g_hist[i], h_hist[i]
        if not g < h:
            raise ValueError(f"need g < h at theta={theta}: got [{g}, {h}]")
        if g < g0 - 1e-12 or h > h0 + 1e-12:
            raise CompatibleConditionViolation(
                float(theta),
                f"[{g}, {h}] at theta={theta} not contained in initial [{g0}, {h0}]",
            )
        vals = np.asarray(raw.phi[i], dtype=float)
        if vals.ndim != 1 or vals.size < 3:
            raise ValueError(f"phi at theta={theta} needs >= 3 samples")
        if abs(vals[0]) > 1e-12 or abs(vals[-1]) > 1e-12:
            raise RangeViolation(f"phi must vanish at the fronts (theta={theta})")
        interior = vals[1:-1]
        if np.any(interior <= 0.0):
            raise RangeViolation(f"phi must be strictly positive inside (theta={theta})")
        if np.any(interior > ustar * (1.0 + 1e-12)):
            raise RangeViolation(
                f"phi exceeds ustar={ustar} at theta={theta}: max {np.max(interior)}"
            )
        phi_out.append(vals.copy())

    return InitialHistory(
        thetas=thetas.copy(),
        g_hist=g_hist.copy(),
        h_hist=h_hist.copy(),
        phi=tuple(phi_out),
    )
