"""p-Hopf-Lax transforms, the c-transform and the experiments built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameterError, PreconditionError
from .heat import HeatOperator
from .laplacian_bounds import check_upper_bound
from .space import MmSpace, as_mask, metric, multi_source_dijkstra


@dataclass(frozen=True)
class HopfLaxResult:
    values: np.ndarray
    argmin: np.ndarray
    p: float
    t: float


def _check(space, f, p, t):
    if p < 1:
        raise InvalidParameterError("p must be at least 1")
    if not t > 0:
        raise InvalidParameterError("t must be positive")
    f = np.asarray(f, dtype=float)
    if f.shape != (space.vertex_count,) or not np.all(np.isfinite(f)):
        raise InvalidParameterError("f must be finite with one value per vertex")
    return f


def hopf_lax(space: MmSpace, f, p: float = 1.0, t: float = 1.0) -> HopfLaxResult:
    """``Q^p_t f(x) = min_y f(y) + d(x, y)^p / (p t^(p-1))``, argmin lowest id on ties.

    For ``p = 1`` the value does not depend on ``t`` and is computed by one
    multi-source shortest-path run seeded with the values of ``f``.
    """
    f = _check(space, f, p, t)
    if p == 1:
        vals, arg = multi_source_dijkstra(space, np.arange(space.vertex_count), offsets=f)
        return HopfLaxResult(vals, arg, 1.0, float(t))
    return hopf_lax_scan(space, f, p, t)


def hopf_lax_scan(space: MmSpace, f, p: float = 1.0, t: float = 1.0) -> HopfLaxResult:
    """Direct minimization over all vertices using the distance table."""
    f = _check(space, f, p, t)
    m = metric(space)
    n = space.vertex_count
    vals = np.empty(n)
    arg = np.empty(n, dtype=np.int64)
    coef = 1.0 if p == 1 else 1.0 / (p * t ** (p - 1))
    block = 256
    for start in range(0, n, block):
        rows = m.rows(range(start, min(n, start + block)))
        cost = f[None, :] + (rows if p == 1 else coef * rows**p)
        k = np.argmin(cost, axis=1)
        arg[start:start + len(k)] = k
        vals[start:start + len(k)] = cost[np.arange(len(k)), k]
    return HopfLaxResult(vals, arg, float(p), float(t))


def c_transform(space: MmSpace, f) -> HopfLaxResult:
    """``f^c = Q^1 f``."""
    return hopf_lax(space, f, 1.0, 1.0)


def sup_transform(space: MmSpace, psi) -> HopfLaxResult:
    """``sup_y psi(y) - d(., y)``, as the negation of the c-transform of ``-psi``."""
    res = c_transform(space, -np.asarray(psi, dtype=float))
    return HopfLaxResult(-res.values, res.argmin, 1.0, 1.0)


def lipschitz_excess(space: MmSpace, f) -> float:
    """``max_{u,v} |f(u) - f(v)| - d(u, v)``; checking edges suffices on a graph."""
    f = np.asarray(f, dtype=float)
    u, v = space.edges[:, 0], space.edges[:, 1]
    return float(np.max(np.abs(f[u] - f[v]) - space.lengths)) if space.edge_count else 0.0


@dataclass(frozen=True)
class KuwadaReport:
    max_violation: float
    worst: tuple  # (x, y, s)
    per_s: tuple  # max violation for each s


def kuwada_check(space: MmSpace, heat_op: HeatOperator, f, p: float, K: float, s_grid,
                 pairs=None) -> KuwadaReport:
    """Max of ``P_s(Q^p_1 f)(x) - P_s f(y) - exp(-pKs)/p d(x, y)^p`` over pairs and times.

    ``pairs`` is an ``(k, 2)`` array; ``None`` means all ordered pairs.
    """
    f = _check(space, f, p, 1.0)
    if np.any(f < 0):
        raise InvalidParameterError("f must be nonnegative")
    q = hopf_lax(space, f, p, 1.0).values
    m = metric(space)
    best, worst, per_s = -np.inf, None, []
    for s in s_grid:
        a = heat_op.apply(q, s)
        b = heat_op.apply(f, s)
        c = math.exp(-p * K * s) / p
        if pairs is None:
            D = m.table if m.dense else m.rows(range(space.vertex_count))
            viol = a[:, None] - b[None, :] - c * D**p
            k = int(np.argmax(viol))
            x, y = divmod(k, space.vertex_count)
            top = float(viol[x, y])
        else:
            pairs = np.asarray(pairs, dtype=np.int64)
            d = np.array([m(int(x), int(y)) for x, y in pairs])
            viol = a[pairs[:, 0]] - b[pairs[:, 1]] - c * d**p
            k = int(np.argmax(viol))
            x, y = int(pairs[k, 0]), int(pairs[k, 1])
            top = float(viol[k])
        per_s.append(top)
        if top > best:
            best, worst = top, (int(x), int(y), float(s))
    return KuwadaReport(best, worst, tuple(per_s))


@dataclass(frozen=True)
class PreservationReport:
    excess: float  # max over omega' of L f^c - (eta - min K d)
    witness: Optional[int]
    eta: float
    curvature_shift: float  # min over omega' x omega of K d(x, y)
    hypothesis_excess: float  # max over omega of L f - eta (<= 0 when the precondition holds)
    transformed_equals_input: bool


def preservation_experiment(space: MmSpace, f, omega, omega_prime, eta: float, K: float) -> PreservationReport:
    """Measure how far ``L f^c <= eta - min K d`` is from holding on ``omega_prime``.

    Both preconditions are checked: ``L f <= eta`` on ``omega`` and every
    argmin of ``f^c`` over ``omega_prime`` lies in ``omega``.  A failed
    precondition aborts with :class:`PreconditionError` naming the vertex.
    """
    f = np.asarray(f, dtype=float)
    omega = as_mask(space, omega)
    omega_prime = as_mask(space, omega_prime)
    if not omega.any() or not omega_prime.any():
        raise InvalidParameterError("both regions must be nonempty")
    cert = check_upper_bound(space, f, eta, omega, "distributional")
    if not cert.passed:
        raise PreconditionError(f"Laplacian bound fails at vertex {cert.witness}", vertex=cert.witness)
    res = c_transform(space, f)
    idx = np.flatnonzero(omega_prime)
    outside = idx[~omega[res.argmin[idx]]]
    if outside.size:
        v = int(outside[0])
        raise PreconditionError(
            f"minimizer for vertex {v} is {int(res.argmin[v])}, outside the region", vertex=v
        )
    m = metric(space)
    om = np.flatnonzero(omega)
    dmin = np.inf
    dmax = 0.0
    for x in idx:
        row = m.row(int(x))[om]
        dmin = min(dmin, float(row.min()))
        dmax = max(dmax, float(row.max()))
    shift = K * dmin if K >= 0 else K * dmax
    lap = space.apply_laplacian(res.values)
    excess = lap[idx] - (eta - shift)
    k = int(np.argmax(excess))
    return PreservationReport(
        float(excess[k]),
        int(idx[k]) if excess[k] > 0 else None,
        float(eta),
        float(shift),
        cert.signed_excess,
        bool(np.array_equal(res.values, f)),
    )
