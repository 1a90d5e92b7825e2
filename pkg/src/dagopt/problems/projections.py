"""Euclidean projections onto the feasible sets used by the problems."""

from __future__ import annotations

import numpy as np

from ..errors import InfeasibleBudget

_EQ_TOL = 1e-10


def project_box(point: np.ndarray, lo, hi) -> np.ndarray:
    return np.clip(point, lo, hi)


def project_box_budget_batch(points: np.ndarray, x_max: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Row-wise projection onto {0 <= x <= x_max[i], 1'x = E[i]}.

    The projection is clip(point - theta, 0, x_max) where the scalar shift
    theta makes the budget bind.  The mass s(theta) = 1'clip(point - theta)
    is piecewise linear and non-increasing with breakpoints at point_k and
    point_k - x_max_k, so theta is solved exactly by evaluating the mass at
    every breakpoint and interpolating inside the bracketing segment."""
    points = np.asarray(points, dtype=float)
    x_max = np.asarray(x_max, dtype=float)
    E = np.asarray(E, dtype=float)
    if np.any(x_max < 0):
        raise InfeasibleBudget("x_max must be nonnegative")
    total = x_max.sum(axis=1)
    if np.any(E < -_EQ_TOL) or np.any(E > total + _EQ_TOL):
        raise InfeasibleBudget("some budget E outside [0, sum(x_max)]")
    E = np.clip(E, 0.0, total)

    # breakpoints per row, ascending; mass is non-increasing in theta
    bp = np.sort(np.concatenate([points, points - x_max], axis=1), axis=1)  # (m, 2K)
    mass = np.clip(points[:, None, :] - bp[:, :, None], 0.0, x_max[:, None, :]).sum(axis=2)  # (m, 2K)

    m = points.shape[0]
    theta = np.empty(m)
    for i in range(m):
        # rightmost segment [bp[j], bp[j+1]] with mass[j] >= E >= mass[j+1]
        j = int(np.searchsorted(-mass[i], -E[i], side="left"))
        if j == 0:
            theta[i] = bp[i, 0]  # E equals total capacity
        elif j == mass.shape[1]:
            theta[i] = bp[i, -1]  # E == 0
        else:
            m_lo, m_hi = mass[i, j - 1], mass[i, j]
            if m_lo == m_hi:
                theta[i] = bp[i, j - 1]
            else:
                frac = (m_lo - E[i]) / (m_lo - m_hi)
                theta[i] = bp[i, j - 1] + frac * (bp[i, j] - bp[i, j - 1])
    out = np.clip(points - theta[:, None], 0.0, x_max)
    # the clip keeps the box exact; polish the equality to 1e-10 by nudging
    # the strictly interior coordinates uniformly
    gap = E - out.sum(axis=1)
    rows = np.nonzero(np.abs(gap) > 1e-13)[0]
    for i in rows:
        free = (out[i] > 0) & (out[i] < x_max[i])
        nfree = int(free.sum())
        if nfree > 0:
            out[i, free] += gap[i] / nfree
            out[i] = np.clip(out[i], 0.0, x_max[i])
    return out


def project_box_budget(point: np.ndarray, x_max: np.ndarray, E: float) -> np.ndarray:
    """Projection onto {0 <= x <= x_max, 1'x = E} (single row)."""
    return project_box_budget_batch(
        np.asarray(point, dtype=float)[None, :],
        np.asarray(x_max, dtype=float)[None, :],
        np.array([E], dtype=float),
    )[0]
