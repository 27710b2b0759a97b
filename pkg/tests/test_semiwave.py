import math

import numpy as np
import pytest

from kpp_stefan.characteristic import c0
from kpp_stefan.errors import BracketFailure, NotConverged, TruncationSuspect
from kpp_stefan.model import ProblemSpec, eval_f, eval_fprime, make_reaction
from kpp_stefan.semiwave import (
    SemiWaveNumerics,
    cstar,
    eta,
    solve_profile,
    speed_curve,
)
from oracles import quadrature_slope, shooting_cstar, shooting_slope

# Frozen oracle outputs for the default Beverton-Holt family (p=2, q=1, d=1).
SLOPE_C0_QUADRATURE = 0.47687658546024125   # sqrt(2*(1.5 - 2 ln 2))
SLOPE_C03_SHOOTING = 0.31127539008561245    # backward shooting, c = 0.3
CSTAR_MU1_TAU0_SHOOTING = 0.3075672043183496


@pytest.fixture(scope="module")
def bh():
    return make_reaction("beverton_holt", {"p": 2.0, "q": 1.0}, d=1.0)


def spec_for(bh, tau=0.0, mu=1.0):
    return ProblemSpec(reaction=bh, tau=tau, mu=mu)


class TestSolveProfile:
    def test_zero_speed_slope_against_quadrature_oracle(self, bh):
        # re-derive the frozen value from the first integral
        live = quadrature_slope(lambda s: eval_f(bh, s), bh.d, bh.ustar)
        assert live == pytest.approx(SLOPE_C0_QUADRATURE, abs=1e-12)
        profile = solve_profile(spec_for(bh), c=0.0)
        assert profile.qprime0 == pytest.approx(SLOPE_C0_QUADRATURE, rel=1e-3)

    def test_profile_shape_invariants(self, bh):
        profile = solve_profile(spec_for(bh, tau=0.5), c=0.4)
        q = profile.q
        assert q[0] == 0.0
        assert q[-1] == pytest.approx(bh.ustar, abs=1e-12)
        assert np.all(q >= -1e-12) and np.all(q <= bh.ustar + 1e-8)
        assert np.all(np.diff(q) >= -1e-10)
        assert profile.residual < 1e-9

    def test_degenerate_above_linear_bound(self, bh):
        # no positive solution: interior collapses and the slope vanishes
        spec = spec_for(bh, tau=0.5)
        bound = c0(0.5, bh.fprime0, bh.d)
        narrow = solve_profile(spec, c=bound + 0.1, L=40.0)
        wide = solve_profile(spec, c=bound + 0.1, L=80.0)
        assert narrow.qprime0 < 1e-12
        half = slice(0, narrow.q.size // 2)
        assert np.max(narrow.q[half]) < 1e-8
        assert np.max(wide.q[: wide.q.size // 2]) < np.max(narrow.q[half])

    def test_pointwise_monotone_in_speed(self, bh):
        spec = spec_for(bh, tau=0.5)
        p1 = solve_profile(spec, c=0.2, L=40.0)
        p2 = solve_profile(spec, c=0.6, L=40.0)
        assert np.all(p2.q <= p1.q + 1e-10)
        assert p2.qprime0 < p1.qprime0

    def test_slope_monotone_in_delay(self, bh):
        for c in (0.1, 0.2, 0.3, 0.4, 0.5):
            early = solve_profile(spec_for(bh, tau=0.25), c=c)
            late = solve_profile(spec_for(bh, tau=1.0), c=c)
            assert early.qprime0 > late.qprime0

    def test_grid_convergence_second_order(self, bh):
        spec = spec_for(bh, tau=0.5)
        slopes = []
        for k in (1, 2, 4):
            p = solve_profile(spec, c=0.3, L=40.0, dz=40.0 / (1000 * k), relax_tol=1e-11)
            slopes.append(p.qprime0)
        e1 = abs(slopes[0] - slopes[1])
        e2 = abs(slopes[1] - slopes[2])
        order = math.log2(e1 / e2)
        assert order >= 1.8

    def test_truncation_guard(self, bh):
        spec = spec_for(bh)
        with pytest.raises(TruncationSuspect):
            solve_profile(spec, c=0.0, L=12.0, dz=12.0 / 2000, check_truncation=True)
        solve_profile(spec, c=0.0, L=40.0, check_truncation=True)  # no raise

    def test_not_converged_budget(self, bh):
        with pytest.raises(NotConverged):
            solve_profile(spec_for(bh), c=0.0, max_steps=5)


class TestEta:
    def test_positive_at_zero_speed(self, bh):
        assert eta(spec_for(bh, tau=0.5), 0.0) > 0

    def test_negative_near_linear_bound(self, bh):
        spec = spec_for(bh, tau=0.5)
        bound = c0(0.5, bh.fprime0, bh.d)
        assert eta(spec, 0.999 * bound) < 0

    def test_against_shooting_oracle(self, bh):
        # re-derive the frozen value with the phase-plane oracle
        live = shooting_slope(0.3, lambda s: eval_f(bh, s), lambda s: eval_fprime(bh, s), bh.d, bh.ustar)
        assert live == pytest.approx(SLOPE_C03_SHOOTING, abs=1e-9)
        val = eta(spec_for(bh, tau=0.0, mu=1.0), 0.3)
        assert val == pytest.approx(SLOPE_C03_SHOOTING - 0.3, abs=5e-4)

    def test_strictly_decreasing_in_c(self, bh):
        spec = spec_for(bh, tau=0.5)
        bound = c0(0.5, bh.fprime0, bh.d)
        cs = np.linspace(0.02, bound * 0.98, 20)
        vals = [eta(spec, float(c)) for c in cs]
        assert np.all(np.diff(vals) < 0)


class TestCstar:
    def test_against_local_shooting_oracle(self, bh):
        res = cstar(spec_for(bh, tau=0.0, mu=1.0))
        assert res.cstar == pytest.approx(CSTAR_MU1_TAU0_SHOOTING, rel=1e-3)
        assert 0 < res.cstar < res.c0
        assert res.eta_residual < 1e-4

    def test_oracle_self_consistency(self, bh):
        live = shooting_cstar(
            1.0, lambda s: eval_f(bh, s), lambda s: eval_fprime(bh, s), bh.d, bh.ustar, c_hi=1.9
        )
        assert live == pytest.approx(CSTAR_MU1_TAU0_SHOOTING, abs=1e-8)

    def test_small_mu_limit_identity(self, bh):
        # c*/mu = q'(0) -> q'(0+) at c = 0, so cstar ~ mu * slope(0)
        res = cstar(spec_for(bh, tau=1.0, mu=0.01))
        assert res.cstar == pytest.approx(0.01 * SLOPE_C0_QUADRATURE, rel=2e-2)

    def test_decreasing_in_delay(self, bh):
        res0 = cstar(spec_for(bh, tau=0.0, mu=1.0))
        res1 = cstar(spec_for(bh, tau=1.0, mu=1.0))
        assert res1.cstar < res0.cstar

    def test_bracket_failure_when_numerics_cannot_resolve(self, bh):
        frozen = SemiWaveNumerics(relax_tol=1e30, defect_check_every=1, dt=1e-7)
        with pytest.raises(BracketFailure):
            cstar(spec_for(bh, tau=0.5), frozen)


class TestSpeedCurve:
    def test_increasing_in_mu(self, bh):
        curve = speed_curve(spec_for(bh, tau=1.0), "mu", [0.5, 1.0, 2.0, 4.0, 8.0])
        speeds = [p.result.cstar for p in curve.points]
        assert all(p.error is None for p in curve.points)
        assert np.all(np.diff(speeds) > 0)
        assert curve.verdict == "strictly increasing"

    def test_decreasing_in_tau(self, bh):
        curve = speed_curve(spec_for(bh, mu=1.0), "tau", [0.0, 0.5, 1.0, 2.0])
        speeds = [p.result.cstar for p in curve.points]
        assert np.all(np.diff(speeds) < 0)
        assert curve.verdict == "strictly decreasing"

    def test_single_point_matches_shooting_oracle(self, bh):
        curve = speed_curve(spec_for(bh, mu=1.0), "tau", [0.0])
        res = curve.points[0].result
        assert res.cstar == pytest.approx(CSTAR_MU1_TAU0_SHOOTING, rel=1e-3)

    def test_per_point_errors_recorded(self, bh):
        bad = SemiWaveNumerics(max_steps=3)
        curve = speed_curve(spec_for(bh, mu=1.0), "tau", [0.0, 1.0], bad)
        assert all(p.result is None and p.error for p in curve.points)
        assert curve.verdict == "insufficient points"

    def test_unsorted_values_rejected(self, bh):
        with pytest.raises(ValueError):
            speed_curve(spec_for(bh), "mu", [2.0, 1.0])
