"""Centralized ground-truth solver.

Full-information projected gradient descent on F with backtracking line
search.  Deliberately independent of the distributed integrator so that
convergence tests are not circular.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import AggregativeProblem, F_grad, F_value


@dataclass(frozen=True)
class OracleSolution:
    x_star: np.ndarray  # (m, n)
    F_star: float
    iterations: int
    pg_norm: float  # final projected-gradient norm
    converged: bool


def centralized_oracle(
    problem: AggregativeProblem,
    tol: float = 1e-9,
    max_iters: int = 200_000,
    step0: float = 1.0,
) -> OracleSolution:
    """Projected gradient descent with Armijo backtracking.

    Stops when the gradient mapping ||x - P(x - s grad)|| / s falls below
    tol.  On max_iters the result is still returned with converged=False."""
    x = problem.eval_project_all(np.zeros((problem.m, problem.n)))
    fx = F_value(problem, x)
    step = step0
    pg = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        grad = F_grad(problem, x)
        # gradient mapping at the current step size
        x_trial = problem.eval_project_all(x - step * grad)
        diff = x - x_trial
        pg = float(np.linalg.norm(diff)) / step
        if pg < tol:
            break
        # Armijo backtracking on the projected step
        accepted = False
        for _ in range(60):
            x_trial = problem.eval_project_all(x - step * grad)
            diff = x_trial - x
            f_trial = F_value(problem, x_trial)
            if f_trial <= fx + float((grad * diff).sum()) + 0.5 / step * float((diff * diff).sum()) + 1e-15:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        x, fx = x_trial, f_trial
        step = min(step * 1.25, 1e6)  # let the step recover between iterations
    converged = pg < tol
    return OracleSolution(x_star=x, F_star=fx, iterations=it, pg_norm=pg, converged=converged)
