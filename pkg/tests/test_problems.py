"""Problem instances: projections, gradients, constants, and the oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagopt.errors import InfeasibleBudget
from dagopt.problems.base import F_grad, F_value, aggregate
from dagopt.problems.ev import desk_ev_spec, ev_problem
from dagopt.problems.gradcheck import finite_diff_check, random_interior_point
from dagopt.problems.oracle import centralized_oracle
from dagopt.problems.projections import project_box_budget, project_box_budget_batch
from dagopt.problems.synthetic import synthetic_problem


def bisection_projection(point, x_max, E, iters=200):
    """Independent reference: solve sum(clip(p - theta, 0, x_max)) = E by bisection."""
    lo = float(point.min() - x_max.max() - 1.0)
    hi = float(point.max() + 1.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.clip(point - mid, 0.0, x_max).sum() > E:
            lo = mid
        else:
            hi = mid
    return np.clip(point - 0.5 * (lo + hi), 0.0, x_max)


class TestProjection:
    def test_matches_bisection_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            K = int(rng.integers(2, 14))
            x_max = rng.uniform(0.5, 5.0, K)
            point = rng.normal(0.0, 4.0, K)
            E = float(rng.uniform(0.0, x_max.sum()))
            got = project_box_budget(point, x_max, E)
            ref = bisection_projection(point, x_max, E)
            assert np.allclose(got, ref, atol=1e-9)
            assert got.sum() == pytest.approx(E, abs=1e-9)
            assert np.all(got >= -1e-12) and np.all(got <= x_max + 1e-12)

    @given(data=st.data())
    @settings(max_examples=50, deadline=None)
    def test_feasibility_and_optimality_properties(self, data):
        K = data.draw(st.integers(2, 8))
        x_max = np.array(data.draw(st.lists(st.floats(0.1, 5.0), min_size=K, max_size=K)))
        point = np.array(data.draw(st.lists(st.floats(-8.0, 8.0), min_size=K, max_size=K)))
        frac = data.draw(st.floats(0.0, 1.0))
        E = frac * x_max.sum()
        out = project_box_budget(point, x_max, E)
        assert out.sum() == pytest.approx(E, abs=1e-8)
        assert np.all(out >= -1e-10) and np.all(out <= x_max + 1e-10)
        # projection onto a convex set: <p - out, z - out> <= 0 for feasible z,
        # spot-checked against the uniform feasible point z = E * x_max/sum.
        z = E * x_max / x_max.sum()
        assert np.dot(point - out, z - out) <= 1e-8

    def test_zero_budget_gives_zeros(self):
        out = project_box_budget(np.array([1.0, -2.0, 3.0]), np.ones(3), 0.0)
        assert np.array_equal(out, np.zeros(3))

    def test_full_budget_gives_upper_bounds(self):
        x_max = np.array([1.0, 2.0, 0.5])
        out = project_box_budget(np.array([-5.0, 0.0, 9.0]), x_max, x_max.sum())
        assert np.allclose(out, x_max)

    def test_infeasible_budget_rejected(self):
        with pytest.raises(InfeasibleBudget):
            project_box_budget(np.zeros(3), np.ones(3), 4.0)

    def test_batch_agrees_with_single(self):
        rng = np.random.default_rng(1)
        pts = rng.normal(0.0, 3.0, (6, 5))
        x_max = rng.uniform(0.5, 4.0, (6, 5))
        E = np.array([0.3 * row.sum() for row in x_max])
        got = project_box_budget_batch(pts, x_max, E)
        for i in range(6):
            assert np.allclose(got[i], project_box_budget(pts[i], x_max[i], E[i]), atol=1e-12)


class TestEVInstance:
    def test_spec_shapes_and_feasibility(self):
        spec = desk_ev_spec(20)
        assert spec.m == 20
        assert spec.x_max.shape == (20, 13)
        assert np.all(spec.E <= spec.x_max.sum(axis=1) + 1e-9)
        assert np.all(spec.d >= 0)

    def test_aggregate_is_mean_of_locals(self, desk_problem):
        rng = np.random.default_rng(2)
        x = desk_problem.eval_project_all(rng.uniform(0, 5, (20, 13)))
        phi = aggregate(desk_problem, x)
        assert np.allclose(phi, desk_problem.eval_g_all(x).mean(axis=0), atol=1e-12)

    def test_gradient_bound_constants_hold(self, desk_problem):
        # L_f1 / L_f2 must dominate observed gradient norms over the clamp box.
        c = desk_problem.constants
        rng = np.random.default_rng(3)
        cap = desk_problem.meta["psi_cap"]
        for _ in range(50):
            x = desk_problem.eval_project_all(rng.uniform(0, 8, (20, 13)))
            psi = rng.uniform(0.0, cap, (20, 13))
            g1 = desk_problem.eval_grad1_all(x, psi)
            g2 = desk_problem.eval_grad2_all(x, psi)
            assert np.linalg.norm(g1, axis=1).max() <= c.L_f1 + 1e-9
            assert np.linalg.norm(g2, axis=1).max() <= c.L_f2 + 1e-9

    def test_grad2_bound_holds_beyond_cap(self, desk_problem):
        # the price slope saturates above the clamp box, so the bound is global
        c = desk_problem.constants
        rng = np.random.default_rng(4)
        x = desk_problem.eval_project_all(rng.uniform(0, 8, (20, 13)))
        psi = rng.uniform(-50.0, 50.0, (20, 13))
        g2 = desk_problem.eval_grad2_all(x, psi)
        assert np.linalg.norm(g2, axis=1).max() <= c.L_f2 + 1e-9

    def test_finite_diff_on_ev(self, desk_problem):
        x, psi = random_interior_point(desk_problem, seed=0)
        assert finite_diff_check(desk_problem, x, psi).max_rel_error < 1e-5


class TestSynthetic:
    @pytest.mark.parametrize("kind", ["strongly-convex", "convex", "nonconvex"])
    def test_finite_diff(self, kind):
        prob = synthetic_problem(kind, 10, 4, 3, seed=0)
        x, psi = random_interior_point(prob, seed=1)
        assert finite_diff_check(prob, x, psi).max_rel_error < 1e-5

    def test_strong_convexity_modulus(self):
        prob = synthetic_problem("strongly-convex", 10, 4, 3, seed=0)
        assert prob.constants.mu > 0.0
        assert synthetic_problem("convex", 10, 4, 3, seed=0).constants.mu == 0.0

    def test_unknown_kind_rejected(self):
        with pytest.raises(Exception):
            synthetic_problem("cubic", 4, 2, 2, seed=0)


class TestOracle:
    def test_stationarity_at_solution(self):
        prob = synthetic_problem("strongly-convex", 10, 4, 3, seed=0)
        sol = centralized_oracle(prob)
        assert sol.converged
        assert sol.pg_norm < 1e-7
        # projected gradient fixed point: P_X(x* - grad) == x*
        g = F_grad(prob, sol.x_star)
        assert np.allclose(prob.eval_project_all(sol.x_star - g), sol.x_star, atol=1e-6)

    def test_oracle_beats_random_feasible_points(self, desk_problem):
        sol = centralized_oracle(desk_problem)
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = desk_problem.eval_project_all(rng.uniform(0, 8, (20, 13)))
            assert F_value(desk_problem, x) >= sol.F_star - 1e-9
