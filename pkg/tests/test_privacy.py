"""Budget accounting, regime validation, calibration, and sequence bounds."""

import math

import numpy as np
import pytest

from dagopt import privacy
from dagopt.errors import DenominatorNonpositive, RegimeViolation
from dagopt.harness.config import apply_preset, build_schedules, default_config

# Golden values frozen from a 256-bit mpmath summation of the budget series
# (sum over t=1..1e4 of the two per-iteration sensitivity/noise ratios) with
# the summable-stepsize preset (u=3.1, w1=1.2, w2=0.4, noise decay 0.19/0.2),
# unit noise magnitudes, lambda0=1, gamma1=1, gamma2=4.
GOLDEN_EPS_1E4 = {
    0.80: 133.0168394427446921640802,
    0.48: 465.2888260938502132366960,
}


def truthful_schedules(dim=13):
    return build_schedules(apply_preset(default_config(), "sec5-truthful"), dim=dim)


class TestRegimes:
    def test_summable_stepsize_regime_passes(self):
        rc = privacy.check_regime(truthful_schedules(), "T2-truthful")
        assert all(c.satisfied for c in rc.checks)
        # the two key margins: 3.1 > 1.2+0.4+0.2+1 and 1.2 > 1+0.19
        names = {c.name: (c.left, c.right) for c in rc.checks}
        assert any(abs(l - 3.1) < 1e-12 and abs(r - 2.8) < 1e-12 for l, r in names.values())

    @pytest.mark.parametrize(
        "preset,regime",
        [
            ("corollary1-sc", "T1-strongly-convex"),
            ("corollary1-cvx", "T1-convex"),
            ("corollary1-ncvx", "T1-nonconvex"),
        ],
    )
    def test_rate_presets_pass_their_regimes(self, preset, regime):
        sch = build_schedules(apply_preset(default_config(), preset), dim=3)
        rc = privacy.check_regime(sch, regime)
        assert all(c.satisfied for c in rc.checks), [c for c in rc.checks if not c.satisfied]

    def test_non_summable_stepsize_fails_budget_regime(self):
        sch = build_schedules(apply_preset(default_config(), "corollary1-cvx"), dim=3)
        rc = privacy.check_regime(sch, "T2-truthful")
        assert not all(c.satisfied for c in rc.checks)

    def test_unknown_regime_rejected(self):
        with pytest.raises(Exception):
            privacy.check_regime(truthful_schedules(), "T9")


class TestConstants:
    def test_c1_hand_value(self):
        # c1 = w*gamma2 / (w*gamma2 - (u - w1 - w2)) = 3.2/(3.2-1.5) at w=0.8
        sch = truthful_schedules()
        assert privacy.c1_constant(sch, 0.8) == pytest.approx(3.2 / 1.7, rel=1e-12)
        assert privacy.c1_constant(sch, 0.48) == pytest.approx(1.92 / 0.42, rel=1e-12)

    def test_c1_nonpositive_denominator_rejected(self):
        with pytest.raises(DenominatorNonpositive):
            privacy.c1_constant(truthful_schedules(), 0.3)  # 1.2 < 1.5

    def test_c2_hand_value(self):
        # c2 = (4 w1 / (e ln(2/(2-w))))^{w1} * (2/w), frozen at 256-bit precision
        sch = truthful_schedules()
        assert privacy.c2_constant(sch, 0.8) == pytest.approx(11.075131881332756473, rel=1e-12)
        assert privacy.c2_constant(sch, 0.48) == pytest.approx(38.903973615413627153, rel=1e-12)

    def test_sensitivity_bound_dominates_recursion(self):
        # the closed-form per-iteration sensitivity must upper-bound the
        # numerically iterated recursion once the contraction has settled
        sch = truthful_schedules()
        deltas = privacy.sensitivity_psi_recursion(2000, sch, 0.48)
        for t in (100, 500, 1000, 1999):
            assert privacy.sensitivity_psi(t, sch, 0.48) >= deltas[t] * (1.0 - 1e-9)
        deltas_y = privacy.sensitivity_y_recursion(2000, sch, 0.48)
        for t in (100, 500, 1000, 1999):
            assert privacy.sensitivity_y(t, sch, 0.48) >= deltas_y[t] * (1.0 - 1e-9)


class TestEpsilon:
    @pytest.mark.parametrize("w_hat", [0.80, 0.48])
    def test_budget_matches_high_precision_series(self, w_hat):
        rep = privacy.epsilon(10**4, truthful_schedules(), w_hat)
        assert rep.epsilon == pytest.approx(GOLDEN_EPS_1E4[w_hat], rel=1e-9)

    def test_budget_components_sum(self):
        rep = privacy.epsilon(10**4, truthful_schedules(), 0.48)
        assert rep.epsilon == pytest.approx(rep.eps_psi + rep.eps_y, rel=1e-12)

    def test_budget_monotone_in_horizon(self):
        sch = truthful_schedules()
        eps = [privacy.epsilon(T, sch, 0.48).epsilon for T in (10, 100, 1000)]
        assert eps == sorted(eps)

    def test_infinite_horizon_dominates_finite(self):
        sch = truthful_schedules()
        rep_inf = privacy.epsilon(None, sch, 0.48)
        rep_fin = privacy.epsilon(10**6, sch, 0.48)
        assert math.isfinite(rep_inf.epsilon)
        assert rep_inf.epsilon >= rep_fin.epsilon

    def test_regime_violation_raised_for_non_summable_stepsizes(self):
        sch = build_schedules(apply_preset(default_config(), "corollary1-cvx"), dim=3)
        with pytest.raises(RegimeViolation):
            privacy.epsilon(100, sch, 0.48)

    def test_noise_magnitude_scales_budget_inversely(self):
        import dataclasses

        cfg = apply_preset(default_config(), "sec5-truthful")
        sch1 = build_schedules(cfg, dim=13)
        sch2 = build_schedules(dataclasses.replace(cfg, sigma_zeta=2.0, sigma_xi=2.0), dim=13)
        e1 = privacy.epsilon(1000, sch1, 0.48).epsilon
        e2 = privacy.epsilon(1000, sch2, 0.48).epsilon
        assert e2 == pytest.approx(e1 / 2.0, rel=1e-12)


class TestCalibration:
    @pytest.mark.parametrize("target", [0.5, 1.0, 10.0])
    def test_round_trip(self, target):
        import dataclasses

        cfg = apply_preset(default_config(), "sec5-truthful")
        sch = build_schedules(cfg, dim=13)
        sx, sz = privacy.calibrate_noise(target, 10**4, sch, 0.48)
        sch2 = build_schedules(dataclasses.replace(cfg, sigma_xi=sx, sigma_zeta=sz), dim=13)
        rep = privacy.epsilon(10**4, sch2, 0.48)
        assert rep.epsilon == pytest.approx(target, rel=1e-9)


class TestEta:
    def test_formula(self):
        rep = privacy.eta(0.5, L_f1=2.0, L_f2=3.0, L_g=4.0, D_X=5.0, D_f=6.0)
        assert rep.intrinsic == pytest.approx((2.0 + 3.0 * 4.0) * 5.0, rel=1e-12)
        assert rep.privacy_term == pytest.approx(2.0 * 0.5 * 6.0, rel=1e-12)
        assert rep.eta == pytest.approx(rep.intrinsic + rep.privacy_term, rel=1e-12)
        assert not rep.linearization_exceeded

    @pytest.mark.parametrize("eps", [0.0, 1.0, 419.0])
    def test_linearization_flag_outside_unit_interval(self, eps):
        rep = privacy.eta(eps, 1.0, 1.0, 1.0, 1.0, 1.0)
        assert rep.linearization_exceeded


class TestSequenceBounds:
    def test_no_violations_on_seeded_draws(self):
        draws = privacy.check_lemma2_bounds(40, 2000, seed=0)
        assert len(draws) == 40
        assert not any(d.violated for d in draws)

    def test_zero_initial_value_case_executes(self):
        draws = privacy.check_lemma2_bounds(60, 500, seed=1)
        assert any(d.phi0 == 0.0 for d in draws)

    def test_deterministic_in_seed(self):
        a = privacy.check_lemma2_bounds(10, 200, seed=5)
        b = privacy.check_lemma2_bounds(10, 200, seed=5)
        assert a == b

    def test_direct_case_checks(self):
        assert not privacy.check_lemma2_case_i(a0=0.9, b0=1.0, a=0.3, b=0.8, phi0=5.0, T=2000).violated
        assert not privacy.check_lemma2_case_ii(a0=0.5, b0=2.0, a=1.5, b=1.3, phi0=5.0, T=2000).violated
