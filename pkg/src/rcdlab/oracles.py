"""Independent reference computations used to validate the fast code paths.

Each routine deliberately takes a different route from the production
implementation (Floyd-Warshall instead of Dijkstra, exhaustive enumeration
instead of max-flow, ODE integration instead of closed forms).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse import csgraph

from .errors import InvalidParameterError
from .space import MmSpace

MAX_ENUMERATION = 22


def floyd_warshall_metric(space: MmSpace) -> np.ndarray:
    return csgraph.floyd_warshall(space.length_matrix, directed=False)


def brute_hopf_lax(space: MmSpace, f, p: float = 1.0, t: float = 1.0, table=None):
    """``(values, argmin)`` by scanning a Floyd-Warshall distance table."""
    D = floyd_warshall_metric(space) if table is None else table
    f = np.asarray(f, dtype=float)
    cost = f[None, :] + (D if p == 1 else D**p / (p * t ** (p - 1)))
    arg = np.argmin(cost, axis=1)
    return cost[np.arange(len(f)), arg], arg


def brute_min_cut(space: MmSpace, free, frozen):
    """Exhaustive minimum of the cut objective over the free vertices.

    Returns ``(value, smallest_minimizer_mask)``; the smallest minimizer is
    the intersection of all minimizers.  The objective sums the face
    measures of cut edges with a free endpoint, accumulated in a fixed edge
    order.
    """
    free = np.asarray(free, dtype=bool)
    frozen = np.asarray(frozen, dtype=bool)
    ids = np.flatnonzero(free)
    k = len(ids)
    if k > MAX_ENUMERATION:
        raise InvalidParameterError(f"too many free vertices for enumeration ({k})")
    pos = np.full(space.vertex_count, -1)
    pos[ids] = np.arange(k)
    u, v = space.edges[:, 0], space.edges[:, 1]
    touch = np.flatnonzero(free[u] | free[v])
    configs = np.arange(2**k, dtype=np.int64)
    total = np.zeros(2**k)

    def member(x):
        if free[x]:
            return (configs >> pos[x]) & 1
        return np.full(2**k, int(frozen[x]), dtype=np.int64)

    c = space.face_measures
    for e in touch:
        total += c[e] * (member(u[e]) != member(v[e]))
    best = total.min()
    winners = configs[total == best]
    inter = np.bitwise_and.reduce(winners)
    mask = frozen & ~free
    for x in ids:
        mask[x] = bool((inter >> pos[x]) & 1)
    return float(best), mask


def two_vertex_heat(t: float, mass: float = 1.0, weight: float = 1.0):
    """``P_t`` of ``(1, 0)`` on two equal-mass vertices: ``((1+e^{-2wt/m})/2, (1-e^{-2wt/m})/2)``."""
    e = math.exp(-2 * weight * t / mass)
    return (1 + e) / 2, (1 - e) / 2


def comparison_by_ode(K: float, N: float, x: float) -> float:
    """Solve ``t' = -K - t^2/(N-1)``, ``t(0) = 0`` numerically up to ``x``."""
    if x == 0:
        return 0.0
    sol = solve_ivp(lambda s, y: [-K - y[0] ** 2 / (N - 1)], (0.0, x), [0.0], rtol=1e-12, atol=1e-14,
                    method="DOP853")
    return float(sol.y[0, -1])
