"""The aggregative-problem interface.

A problem bundles, for each agent i, the local objective f_i(x^i, psi), the
aggregate contribution g_i(x^i), the feasible set X_i (as a projection), the
gradients, and the constants used by the ball radius / privacy / truthfulness
formulas.

Conventions
-----------
- x is stacked as an (m, n) array (uniform per-agent dimension n).
- psi arguments are single d-vectors (each agent evaluates at its own psi).
- grad_g(i, x_i) returns the (n, d) matrix whose product with a d-vector is
  the chain-rule term used in the decision update.
- Every problem carries a box [psi_lo, psi_hi] on which f_i(x, .) is defined;
  evaluators clamp psi into it, which keeps grad2_f globally bounded by L_f2
  (required for the ball-containment argument) and pins the domain on which
  the Lipschitz constants are computed.

Vectorized fast paths (g_all, grad1_all, grad2_all, gg_apply_all, f_all,
project_all) operate on all agents at once; the integrator uses them when
present and falls back to per-agent loops otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class ProblemConstants:
    """Assumption-level constants over the compact feasible region.

    L_* are gradient bounds, Lbar_* gradient-Lipschitz moduli, mu the strong
    convexity modulus of F (0 if none), D_X the Euclidean diameter bound of
    X, D_f the max |f_i| over X, D_g the max ||g_i|| over X."""

    L_f1: float
    L_f2: float
    Lbar_f1: float
    Lbar_f2: float
    L_g: float
    Lbar_g: float
    mu: float
    D_X: float
    D_f: float
    D_g: float


@dataclass
class AggregativeProblem:
    m: int
    n: int  # per-agent decision dimension
    d: int  # aggregate dimension
    f: Callable[[int, np.ndarray, np.ndarray], float]
    grad1_f: Callable[[int, np.ndarray, np.ndarray], np.ndarray]  # (n,)
    grad2_f: Callable[[int, np.ndarray, np.ndarray], np.ndarray]  # (d,)
    g: Callable[[int, np.ndarray], np.ndarray]  # (d,)
    grad_g: Callable[[int, np.ndarray], np.ndarray]  # (n, d)
    project: Callable[[int, np.ndarray], np.ndarray]  # (n,)
    constants: ProblemConstants
    psi_lo: np.ndarray = None  # (d,) domain box for psi
    psi_hi: np.ndarray = None
    name: str = "problem"
    # optional vectorized fast paths (all-agents at once)
    f_all: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None  # (m,n),(m,d)->(m,)
    g_all: Optional[Callable[[np.ndarray], np.ndarray]] = None  # (m,n)->(m,d)
    grad1_all: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None  # ->(m,n)
    grad2_all: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None  # ->(m,d)
    gg_apply_all: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None  # (m,n),(m,d)->(m,n)
    project_all: Optional[Callable[[np.ndarray], np.ndarray]] = None  # (m,n)->(m,n)
    # Gradient-check hooks.  interior_check(i, x_i, h) -> bool says whether
    # x_i +- h stays in the smooth evaluation region; the default (None)
    # means "projection leaves the perturbed point unchanged", which is the
    # right test for full-dimensional sets but not for sets with equality
    # constraints (the EV budget), whose f/g are smooth off the set anyway.
    interior_check: Optional[Callable[[int, np.ndarray, float], bool]] = None
    # interior_sampler(i, rng) -> x_i draws a strictly interior point.
    interior_sampler: Optional[Callable[[int, np.random.Generator], np.ndarray]] = None
    meta: dict = field(default_factory=dict)

    # ---- convenience wrappers (fall back to per-agent loops) ----

    def eval_g_all(self, x: np.ndarray) -> np.ndarray:
        if self.g_all is not None:
            return self.g_all(x)
        return np.stack([self.g(i, x[i]) for i in range(self.m)])

    def eval_f_all(self, x: np.ndarray, psi: np.ndarray) -> np.ndarray:
        if self.f_all is not None:
            return self.f_all(x, psi)
        return np.array([self.f(i, x[i], psi[i]) for i in range(self.m)])

    def eval_grad1_all(self, x: np.ndarray, psi: np.ndarray) -> np.ndarray:
        if self.grad1_all is not None:
            return self.grad1_all(x, psi)
        return np.stack([self.grad1_f(i, x[i], psi[i]) for i in range(self.m)])

    def eval_grad2_all(self, x: np.ndarray, psi: np.ndarray) -> np.ndarray:
        if self.grad2_all is not None:
            return self.grad2_all(x, psi)
        return np.stack([self.grad2_f(i, x[i], psi[i]) for i in range(self.m)])

    def apply_grad_g_all(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Per-agent products grad_g(i, x^i) @ v^i, stacked (m, n)."""
        if self.gg_apply_all is not None:
            return self.gg_apply_all(x, v)
        return np.stack([self.grad_g(i, x[i]) @ v[i] for i in range(self.m)])

    def eval_project_all(self, x: np.ndarray) -> np.ndarray:
        if self.project_all is not None:
            return self.project_all(x)
        return np.stack([self.project(i, x[i]) for i in range(self.m)])

    def clamp_psi(self, psi: np.ndarray) -> np.ndarray:
        if self.psi_lo is None:
            return psi
        return np.clip(psi, self.psi_lo, self.psi_hi)


def aggregate(problem: AggregativeProblem, x: np.ndarray) -> np.ndarray:
    """phi(x) = (1/m) sum_i g_i(x^i)."""
    return problem.eval_g_all(x).mean(axis=0)


def F_value(problem: AggregativeProblem, x: np.ndarray) -> float:
    phi = aggregate(problem, x)
    psi = np.broadcast_to(phi, (problem.m, problem.d))
    return float(problem.eval_f_all(x, psi).sum())


def F_grad(problem: AggregativeProblem, x: np.ndarray) -> np.ndarray:
    """Full-information gradient of F, stacked (m, n).

    grad F(x)^i = grad1_f_i(x^i, phi) + grad_g_i(x^i) @ mean_j grad2_f_j(x^j, phi).
    """
    phi = aggregate(problem, x)
    psi = np.broadcast_to(phi, (problem.m, problem.d))
    g2bar = problem.eval_grad2_all(x, psi).mean(axis=0)
    v = np.broadcast_to(g2bar, (problem.m, problem.d))
    return problem.eval_grad1_all(x, psi) + problem.apply_grad_g_all(x, v)
