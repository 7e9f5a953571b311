"""Quadrature rules on the reference triangle and the unit interval.

Triangle rules are collapsed (Duffy) tensor rules: Gauss-Legendre along
the edge direction times Gauss-Jacobi with weight (1 - t) across it. They
are exact for every polynomial of total degree <= `degree`. Weights are
normalized to sum to one, so a physical integral is area * sum(w f).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi


@dataclass(frozen=True, eq=False)
class TriangleRule:
    barycentric: np.ndarray  # (q, 3)
    weights: np.ndarray  # (q,), sums to 1


@dataclass(frozen=True, eq=False)
class EdgeRule:
    points: np.ndarray  # (q,) in [0, 1]
    weights: np.ndarray  # (q,), sums to 1


def _points_for(degree: int) -> int:
    if degree < 0:
        raise ValueError(f"quadrature degree must be >= 0, got {degree}")
    return degree // 2 + 1


@cache
def triangle_rule(degree: int) -> TriangleRule:
    m = _points_for(degree)
    x, wx = leggauss(m)
    s, ws = (x + 1.0) / 2.0, wx / 2.0
    z, wz = roots_jacobi(m, 1.0, 0.0)
    t, wt = (z + 1.0) / 2.0, wz / 4.0

    ss, tt = np.meshgrid(s, t, indexing="ij")
    xi = (ss * (1.0 - tt)).ravel()
    eta = tt.ravel()
    weights = np.outer(ws, wt).ravel()
    weights = weights / weights.sum()
    barycentric = np.column_stack([1.0 - xi - eta, xi, eta])
    return TriangleRule(barycentric, weights)


@cache
def edge_rule(degree: int) -> EdgeRule:
    x, w = leggauss(_points_for(degree))
    return EdgeRule((x + 1.0) / 2.0, w / 2.0)
