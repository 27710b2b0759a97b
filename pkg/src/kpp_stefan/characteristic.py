"""Characteristic function of the linearized semi-wave equation.

delta_c(lambda, tau) = lambda^2 - c*lambda - d + f'(0) * exp(-lambda*c*tau)

For real lambda the map is strictly convex (second derivative
2 + f'(0)*(c*tau)^2 * exp(-lambda*c*tau) > 0), which makes the linear speed
bound c0(tau) bracketable: it is the unique c at which the convex minimum
over lambda > 0 touches zero.  Below c0 the real roots disappear and a
complex root lives in the strip Re > 0, 0 < Im < pi/(c*tau); we track it by
continuation in tau from the closed-form quadratic root at tau = 0.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import ConvergenceFailure, OmegaExit


@dataclass(frozen=True)
class CharacteristicQuery:
    """Parameters of one characteristic-function evaluation context."""

    c: float
    tau: float
    fprime0: float
    d: float

    def __post_init__(self):
        if self.fprime0 <= self.d:
            raise ValueError(f"need fprime0 > d, got {self.fprime0} <= {self.d}")
        if self.c < 0 or self.tau < 0:
            raise ValueError("need c >= 0 and tau >= 0")


@dataclass(frozen=True)
class ComplexRoot:
    alpha: float
    beta: float
    residual: float


def delta(query: CharacteristicQuery, lam) -> complex:
    """Evaluate the characteristic function at a (possibly complex) lambda."""
    c, tau, a, d = query.c, query.tau, query.fprime0, query.d
    lam = complex(lam)
    return lam * lam - c * lam - d + a * cmath.exp(-lam * c * tau)


def _delta_real(query: CharacteristicQuery, lam: float) -> float:
    c, tau, a, d = query.c, query.tau, query.fprime0, query.d
    return lam * lam - c * lam - d + a * math.exp(-lam * c * tau)


def _dprime_real(query: CharacteristicQuery, lam: float) -> float:
    c, tau, a = query.c, query.tau, query.fprime0
    return 2.0 * lam - c - a * c * tau * math.exp(-lam * c * tau)


def _delta_prime(query: CharacteristicQuery, lam: complex) -> complex:
    c, tau, a = query.c, query.tau, query.fprime0
    return 2.0 * lam - c - a * c * tau * cmath.exp(-lam * c * tau)


def _convex_minimizer(query: CharacteristicQuery) -> float:
    """Unique minimizer of the convex real map lambda -> delta(lambda)."""
    c, tau, a = query.c, query.tau, query.fprime0
    if c == 0.0:
        return 0.0
    # d/dlambda is increasing, negative at 0, positive past (c + a*c*tau)/2.
    hi = 0.5 * (c + a * c * tau) + 1.0
    return brentq(lambda x: _dprime_real(query, x), 0.0, hi, xtol=1e-14, maxiter=200)


def _convex_min_value(c: float, tau: float, fprime0: float, d: float) -> float:
    q = CharacteristicQuery(c=c, tau=tau, fprime0=fprime0, d=d)
    return _delta_real(q, _convex_minimizer(q))


def c0(tau: float, fprime0: float, d: float, tol: float = 1e-10, max_iter: int = 200) -> float:
    """Speed at which the characteristic function first admits a real root.

    Bisection on c over the convex inner minimum; the result lies in
    (0, 2*sqrt(fprime0 - d)] with the endpoint attained exactly at tau = 0.
    """
    if fprime0 <= d:
        raise ValueError(f"need fprime0 > d, got {fprime0} <= {d}")
    if tau < 0:
        raise ValueError("need tau >= 0")
    hi = 2.0 * math.sqrt(fprime0 - d)
    if _convex_min_value(hi, tau, fprime0, d) >= 0.0:
        # Only possible at (or within rounding of) tau = 0, where c0 = hi.
        return hi
    lo = 0.0  # min value there is fprime0 - d > 0
    for _ in range(max_iter):
        if hi - lo < tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if _convex_min_value(mid, tau, fprime0, d) > 0.0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceFailure(f"c0 bisection did not reach width {tol} in {max_iter} iterations")


def min_real_root(query: CharacteristicQuery, tol: float = 1e-12):
    """Smallest positive real root of the characteristic function, or None.

    None exactly when the convex minimum is positive, i.e. c < c0(tau).
    """
    lam_min = _convex_minimizer(query)
    m = _delta_real(query, lam_min)
    if m > 0.0:
        return None
    if m == 0.0:
        return lam_min
    # delta(0) = fprime0 - d > 0 and delta(lam_min) < 0: root is bracketed.
    root = brentq(lambda x: _delta_real(query, x), 0.0, lam_min, xtol=1e-15, maxiter=200)
    for _ in range(50):
        if abs(_delta_real(query, root)) < tol:
            break
        dp = _dprime_real(query, root)
        if dp == 0.0:
            break
        root -= _delta_real(query, root) / dp
    return root


def default_continuation_steps(tau: float) -> int:
    return max(50, math.ceil(100.0 * tau))


def complex_root_in_omega(
    c: float,
    tau: float,
    fprime0: float,
    d: float,
    n_steps: int | None = None,
    residual_tol: float = 1e-10,
) -> ComplexRoot:
    """Track the complex root through the strip by continuation in tau.

    Starts from the tau = 0 quadratic root (c/2, sqrt(4*(f'(0)-d) - c^2)/2)
    and Newton-corrects the root of delta at each tau increment.  Requires
    0 < c < c0(tau) so the root exists and stays inside the strip.
    """
    if not 0.0 < c < c0(tau, fprime0, d):
        raise ValueError(f"need 0 < c < c0(tau); got c={c}")
    if n_steps is None:
        n_steps = default_continuation_steps(tau)

    disc = 4.0 * (fprime0 - d) - c * c
    lam = complex(0.5 * c, 0.5 * math.sqrt(disc))
    for k in range(1, n_steps + 1):
        tau_k = tau * k / n_steps
        q = CharacteristicQuery(c=c, tau=tau_k, fprime0=fprime0, d=d)
        converged = False
        for _ in range(60):
            val = delta(q, lam)
            if abs(val) < 1e-14:
                converged = True
                break
            dp = _delta_prime(q, lam)
            if dp == 0:
                break
            lam -= val / dp
        if not converged and abs(delta(q, lam)) > residual_tol:
            raise ConvergenceFailure(
                f"Newton stalled at tau={tau_k}: residual {abs(delta(q, lam))}"
            )
        beta_cap = math.pi / (c * tau_k) if c * tau_k > 0 else math.inf
        if lam.real < -1e-9 or lam.imag < -1e-9 or lam.imag > beta_cap + 1e-9:
            raise OmegaExit(
                f"iterate {lam} left the strip at tau={tau_k} (cap {beta_cap}); "
                "this contradicts the continuation argument and signals a bug"
            )

    q = CharacteristicQuery(c=c, tau=tau, fprime0=fprime0, d=d)
    res = abs(delta(q, lam))
    if res >= residual_tol:
        raise ConvergenceFailure(f"final residual {res} >= {residual_tol}")
    return ComplexRoot(alpha=lam.real, beta=lam.imag, residual=res)
