import math

import numpy as np
import pytest

from kpp_stefan.errors import (
    CompatibleConditionViolation,
    HypothesisViolation,
    RangeViolation,
)
from kpp_stefan.model import (
    ProblemSpec,
    RawHistory,
    eval_f,
    eval_fprime,
    make_cosine_history,
    make_reaction,
    validate_history,
)

# One admissible parameter set per shipped family, plus variants.
SHIPPED = [
    ("beverton_holt", {"p": 2.0, "q": 1.0}, 1.0),
    ("beverton_holt", {"p": 3.0, "q": 2.0}, 1.0),
    ("beverton_holt", {"p": 5.0, "q": 1.0}, 2.0),
    ("logistic_death", {"r": 1.0}, 1.0),
    ("logistic_death", {"r": 0.5}, 1.0),
    (
        "stage_structured",
        {"b_family": "beverton_holt", "b_params": {"p": 4.0, "q": 1.0}, "d_I": 0.5, "tau": 1.0},
        1.0,
    ),
]


def bh_default():
    return make_reaction("beverton_holt", {"p": 2.0, "q": 1.0}, d=1.0)


class TestMakeReaction:
    def test_beverton_holt_default(self):
        fam = bh_default()
        assert fam.ustar == pytest.approx(1.0, abs=1e-12)
        assert fam.fprime0 == pytest.approx(2.0, abs=1e-12)

    def test_logistic_death_matches_classical_logistic(self):
        fam = make_reaction("logistic_death", {"r": 1.0}, d=1.0)
        assert fam.ustar == pytest.approx(1.0, abs=1e-12)
        assert fam.fprime0 == pytest.approx(2.0, abs=1e-12)
        # f(s) - d*s reduces to s*(1 - s)
        s = np.linspace(0.0, 1.0, 101)
        np.testing.assert_allclose(eval_f(fam, s) - 1.0 * s, s * (1.0 - s), atol=1e-14)

    def test_subcritical_birth_rejected(self):
        with pytest.raises(HypothesisViolation):
            make_reaction("beverton_holt", {"p": 0.5, "q": 1.0}, d=1.0)

    def test_nonmonotone_logistic_rejected(self):
        # r > d makes f decrease before reaching ustar = 1.
        with pytest.raises(HypothesisViolation):
            make_reaction("logistic_death", {"r": 3.0}, d=1.0)

    def test_all_shipped_families_pass_checks(self):
        for family_id, params, d in SHIPPED:
            fam = make_reaction(family_id, params, d, n_samples=1000)
            assert fam.fprime0 > fam.d
            assert fam.ustar > 0

    def test_bad_family_name(self):
        with pytest.raises(ValueError):
            make_reaction("ricker", {}, d=1.0)


class TestEvalF:
    def test_zero(self):
        assert eval_f(bh_default(), 0.0) == 0.0

    def test_equilibrium_identity(self):
        fam = bh_default()
        assert eval_f(fam, 1.0) == pytest.approx(fam.d * fam.ustar, abs=1e-14)

    def test_negative_clamped(self):
        assert eval_f(bh_default(), -0.1) == 0.0

    def test_monotone_on_equilibrium_range(self):
        for family_id, params, d in SHIPPED:
            fam = make_reaction(family_id, params, d)
            s = np.linspace(0.0, fam.ustar, 200)
            vals = eval_f(fam, s)
            assert np.all(np.diff(vals) >= -1e-12)

    def test_stage_structured_scaling_identity(self):
        params = {
            "b_family": "beverton_holt",
            "b_params": {"p": 4.0, "q": 1.0},
            "d_I": 0.5,
            "tau": 1.0,
        }
        fam = make_reaction("stage_structured", params, d=1.0)
        birth = make_reaction("beverton_holt", {"p": 4.0, "q": 1.0}, d=1.0)
        s = np.linspace(0.0, 2.0, 500)
        scale = math.exp(-0.5 * 1.0)
        np.testing.assert_allclose(eval_f(fam, s), scale * eval_f(birth, s), atol=1e-12)

    def test_fprime_matches_finite_differences(self):
        fam = bh_default()
        s = np.linspace(0.1, 0.9, 9)
        eps = 1e-6
        fd = (eval_f(fam, s + eps) - eval_f(fam, s - eps)) / (2 * eps)
        np.testing.assert_allclose(eval_fprime(fam, s), fd, rtol=1e-8)


class TestValidateHistory:
    def spec(self, tau=1.0):
        return ProblemSpec(reaction=bh_default(), tau=tau, mu=1.0)

    def test_constant_cosine_history_valid(self):
        spec = self.spec()
        hist = validate_history(spec, make_cosine_history(-1.0, 1.0, 0.5, tau=1.0))
        assert hist.thetas[0] == -1.0 and hist.thetas[-1] == 0.0
        assert np.all(hist.g_hist == -1.0) and np.all(hist.h_hist == 1.0)

    def test_shrinking_past_habitat_rejected(self):
        spec = self.spec()
        raw = make_cosine_history(-1.0, 1.0, 0.5, tau=1.0)
        raw.g_hist = -1.0 + 0.1 * np.asarray(raw.thetas)  # g(-tau) < g(0)
        with pytest.raises(CompatibleConditionViolation) as err:
            validate_history(spec, raw)
        assert err.value.theta == pytest.approx(-1.0)

    def test_amplitude_above_equilibrium_rejected(self):
        spec = self.spec()
        raw = make_cosine_history(-1.0, 1.0, 1.5, tau=1.0)  # ustar = 1
        with pytest.raises(RangeViolation):
            validate_history(spec, raw)

    def test_nonzero_boundary_rejected(self):
        spec = self.spec()
        raw = make_cosine_history(-1.0, 1.0, 0.5, tau=1.0)
        raw.phi[0][0] = 0.01
        with pytest.raises(RangeViolation):
            validate_history(spec, raw)

    def test_interior_zero_rejected(self):
        spec = self.spec()
        raw = make_cosine_history(-1.0, 1.0, 0.5, tau=1.0)
        raw.phi[1][3] = 0.0
        with pytest.raises(RangeViolation):
            validate_history(spec, raw)

    def test_theta_grid_must_reach_zero(self):
        spec = self.spec()
        raw = make_cosine_history(-1.0, 1.0, 0.5, tau=1.0)
        raw.thetas = np.asarray(raw.thetas) - 0.1
        with pytest.raises(ValueError):
            validate_history(spec, raw)

    def test_csv_style_raw_history(self):
        spec = self.spec(tau=0.5)
        thetas = np.array([-0.5, -0.25, 0.0])
        phi = []
        for _ in thetas:
            x = np.linspace(-1.0, 1.0, 41)
            phi.append(0.3 * np.cos(math.pi * x / 2.0))
        for v in phi:
            v[0] = v[-1] = 0.0
        raw = RawHistory(thetas=thetas, g_hist=[-1.0] * 3, h_hist=[1.0] * 3, phi=phi)
        hist = validate_history(spec, raw)
        assert len(hist.phi) == 3


class TestProblemSpec:
    def test_parameter_validation(self):
        fam = bh_default()
        with pytest.raises(ValueError):
            ProblemSpec(reaction=fam, tau=-1.0, mu=1.0)
        with pytest.raises(ValueError):
            ProblemSpec(reaction=fam, tau=0.0, mu=0.0)
