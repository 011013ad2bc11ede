"""The comparison function t_{K,N} and Laplacian comparison for distances to minimal boundaries."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameterError
from .perimeter import PerimeterSet, make_set, perimeter_shares
from .space import MmSpace, as_mask, multi_source_dijkstra, distances_from

# distances within this relative margin of a threshold count as equal to it
SNAP = 1e-9


def t_KN(K: float, N: float, x):
    """Sharp comparison function: ``-sqrt(K(N-1)) tan(sqrt(K/(N-1)) x)``, ``0`` or the ``tanh`` branch.

    Accepts scalars or arrays.  For ``K > 0`` arguments outside the open
    interval ``|x| < (pi/2) sqrt((N-1)/K)`` are rejected.
    """
    if N <= 1:
        raise InvalidParameterError("N must exceed 1")
    arr = np.asarray(x, dtype=float)
    if K > 0:
        half = 0.5 * math.pi * math.sqrt((N - 1) / K)
        if np.any(np.abs(arr) >= half):
            raise InvalidParameterError(f"argument outside the domain (-{half}, {half})")
        out = -math.sqrt(K * (N - 1)) * np.tan(math.sqrt(K / (N - 1)) * arr)
    elif K == 0:
        out = np.zeros_like(arr)
    else:
        out = math.sqrt(-K * (N - 1)) * np.tanh(math.sqrt(-K / (N - 1)) * arr)
    return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class ComparisonProfile:
    K: float
    N: float

    def __post_init__(self):
        if self.N <= 1:
            raise InvalidParameterError("N must exceed 1")

    @property
    def domain(self) -> tuple:
        if self.K > 0:
            half = 0.5 * math.pi * math.sqrt((self.N - 1) / self.K)
            return (-half, half)
        return (-math.inf, math.inf)

    def contains(self, x) -> np.ndarray:
        lo, hi = self.domain
        x = np.asarray(x, dtype=float)
        return (x > lo) & (x < hi)

    def __call__(self, x):
        return t_KN(self.K, self.N, x)

    def ode_residual(self, x, step: float = 1e-3):
        """``|t' + K + t^2/(N-1)|`` with a Richardson-extrapolated central difference for ``t'``."""
        x = np.asarray(x, dtype=float)

        def central(s):
            return (self(x + s) - self(x - s)) / (2 * s)

        deriv = (4 * central(step / 2) - central(step)) / 3
        return np.abs(deriv + self.K + self(x) ** 2 / (self.N - 1))


@dataclass(frozen=True)
class DistanceProfile:
    base: PerimeterSet
    d_to_closure: np.ndarray  # 0 on E
    d_signed: np.ndarray  # negative inside, distance to the cut interface
    footpoint: np.ndarray  # inner boundary vertex realizing d_to_closure (lowest id on ties)


def distance_profile(space: MmSpace, E) -> DistanceProfile:
    """Distances from the closure of ``E`` and signed distance to its boundary.

    ``d_to_closure`` is a multi-source shortest path from the inner boundary
    vertices.  ``d_signed`` measures distance to the interface, placed at the
    midpoints of the cut edges, and is propagated within each side.
    """
    E = E if isinstance(E, PerimeterSet) else make_set(space, E)
    inner = np.flatnonzero(E.inner_boundary)
    if inner.size == 0:
        raise InvalidParameterError("set has no boundary")
    d, foot = multi_source_dijkstra(space, inner)
    d[E.members] = 0.0
    foot[E.members] = -1
    foot[E.inner_boundary] = np.flatnonzero(E.inner_boundary)
    u, v = space.edges[E.cut_edges, 0], space.edges[E.cut_edges, 1]
    half = space.lengths[E.cut_edges] / 2
    ds = np.empty(space.vertex_count)
    for side, sign in ((~E.members, 1.0), (E.members, -1.0)):
        ends = np.where(side[u], u, v)
        off = np.full(space.vertex_count, np.inf)
        np.minimum.at(off, ends, half)
        src = np.flatnonzero(np.isfinite(off))
        dist, _ = multi_source_dijkstra(space, src, offsets=off[src], allowed=side)
        ds[side] = sign * dist[side]
    return DistanceProfile(E, d, ds, foot)


@dataclass(frozen=True)
class ComparisonReport:
    max_excess: float
    witness: Optional[int]
    reach_excess: float  # restricted to vertices whose footpoint lies in the region
    evaluated: int
    outside_domain: int  # vertices skipped because d is outside the domain of t


def laplacian_comparison_report(space: MmSpace, E, profile: ComparisonProfile, region=None,
                                dist: DistanceProfile | None = None) -> ComparisonReport:
    """Max over ``region`` minus the closure of ``(L d)(x) - t(d(x))`` for ``d = d_closure(E)``."""
    dist = dist or distance_profile(space, E)
    E = dist.base
    region = as_mask(space, region) & ~E.members
    d = dist.d_to_closure
    inside = region & profile.contains(d)
    skipped = int(region.sum() - inside.sum())
    idx = np.flatnonzero(inside)
    if idx.size == 0:
        return ComparisonReport(-math.inf, None, -math.inf, 0, skipped)
    excess = space.apply_laplacian(d)[idx] - profile(d[idx])
    k = int(np.argmax(excess))
    reach = as_mask(space, region) | E.inner_boundary
    in_reach = reach[dist.footpoint[idx]]
    reach_ex = float(excess[in_reach].max()) if in_reach.any() else -math.inf
    return ComparisonReport(float(excess[k]), int(idx[k]), reach_ex, int(idx.size), skipped)


@dataclass(frozen=True)
class BoundaryRepresentation:
    vertices: np.ndarray
    ratios: np.ndarray  # Laplacian mass of d over perimeter share, per boundary vertex
    min_ratio: float
    max_ratio: float
    interior_mass: float  # max |Laplacian mass| at region vertices off the boundary, outside E


def boundary_representation_report(space: MmSpace, E, profile: ComparisonProfile | None = None,
                                   region=None, dist: DistanceProfile | None = None) -> BoundaryRepresentation:
    """Compare the Laplacian mass of ``d_closure`` on the boundary with the perimeter.

    The mass of ``m L d`` at an inner boundary vertex is divided by the face
    measure of the cut edges incident to it.
    """
    dist = dist or distance_profile(space, E)
    E = dist.base
    region = as_mask(space, region)
    d = dist.d_to_closure
    mu = space.weight_matrix @ d - space.degrees * d
    share = perimeter_shares(space, E, side="inner")
    verts = np.flatnonzero(E.inner_boundary & region)
    ratios = mu[verts] / share[verts]
    off = region & ~E.members & ~E.outer_boundary
    interior = float(np.max(np.abs(mu[off]))) if off.any() else 0.0
    if verts.size == 0:
        return BoundaryRepresentation(verts, ratios, math.nan, math.nan, interior)
    return BoundaryRepresentation(verts, ratios, float(ratios.min()), float(ratios.max()), interior)


@dataclass(frozen=True)
class SignedDistanceReport:
    inside_excess: float  # max over E n region of t(d^s) - L d^s
    outside_excess: float  # max over region minus E of L d^s - t(d^s)
    boundary_mass: float  # max |m L d^s| over boundary vertices in region
    boundary_total: float  # sum of m L d^s over boundary vertices in region


def signed_distance_report(space: MmSpace, E, profile: ComparisonProfile, region=None,
                           dist: DistanceProfile | None = None) -> SignedDistanceReport:
    dist = dist or distance_profile(space, E)
    E = dist.base
    region = as_mask(space, region)
    ds = dist.d_signed
    lap = space.apply_laplacian(ds)
    ok = profile.contains(ds)
    boundary = E.inner_boundary | E.outer_boundary
    ins = region & E.members & ok & ~boundary
    out = region & ~E.members & ok & ~boundary
    t = np.zeros(space.vertex_count)
    t[ok] = profile(ds[ok])
    inside_ex = float(np.max((t - lap)[ins])) if ins.any() else -math.inf
    outside_ex = float(np.max((lap - t)[out])) if out.any() else -math.inf
    bm = (lap * space.masses)[boundary & region]
    return SignedDistanceReport(
        inside_ex,
        outside_ex,
        float(np.max(np.abs(bm))) if bm.size else 0.0,
        math.fsum(bm),
    )


@dataclass(frozen=True)
class EquidistantReport:
    h: float
    per_enlarged: float  # Per(E^h, Gamma)
    per_base: float  # Per(E, Gamma_Sigma)
    factor: float  # cos^{N-1}, 1 or cosh^{N-1} at h
    bound: float  # per_base * factor
    excess: float  # per_enlarged - bound
    ratio: float  # per_enlarged / per_base
    integral_term: float  # sum over G of m t(d)
    integral_excess: float  # per_enlarged - per_base - integral_term
    gamma_size: int
    footpoints_in_window: bool
    reach_ok: bool


def enlargement(space: MmSpace, dist: DistanceProfile, h: float) -> PerimeterSet:
    """``E^h = {d(., closure E) < h}``; distances within ``SNAP * h`` of ``h`` count as ``h``."""
    return make_set(space, dist.d_to_closure < h * (1 - SNAP))


def equidistant_factor(profile: ComparisonProfile, h: float) -> float:
    K, N = profile.K, profile.N
    if K > 0:
        return math.cos(math.sqrt(K / (N - 1)) * h) ** (N - 1)
    if K == 0:
        return 1.0
    return math.cosh(math.sqrt(-K / (N - 1)) * h) ** (N - 1)


def equidistant_perimeter_check(space: MmSpace, E, h: float, window, profile: ComparisonProfile,
                                dist: DistanceProfile | None = None) -> EquidistantReport:
    """Perimeter of the ``h``-enlargement on ``Gamma`` against the base perimeter on its footpoints.

    ``Gamma`` is the part of the discrete equidistant set (the outer
    boundary of ``E^h``) inside ``window``; ``Gamma_Sigma`` is the set of
    footpoints of ``Gamma`` on the boundary of ``E``.
    """
    if h < 0:
        raise InvalidParameterError("h must be nonnegative")
    dist = dist or distance_profile(space, E)
    E = dist.base
    window = as_mask(space, window)
    if h == 0:
        gamma = E.outer_boundary & window
        cut = E.cut_edges
        u, v = space.edges[cut, 0], space.edges[cut, 1]
        sel = cut[gamma[u] | gamma[v]]
        per = math.fsum(space.face_measures[sel])
        return EquidistantReport(0.0, per, per, 1.0, per, 0.0, 1.0 if per else math.nan, 0.0, 0.0,
                                 int(gamma.sum()), True, True)
    Eh = enlargement(space, dist, h)
    gamma = Eh.outer_boundary & window
    cut = Eh.cut_edges
    u, v = space.edges[cut, 0], space.edges[cut, 1]
    outer_end = np.where(Eh.members[u], v, u)
    per_h = math.fsum(space.face_measures[cut[gamma[outer_end]]])
    gamma_ids = np.flatnonzero(gamma)
    feet = np.unique(dist.footpoint[gamma_ids])
    feet = feet[feet >= 0]
    foot_mask = np.zeros(space.vertex_count, dtype=bool)
    foot_mask[feet] = True
    cutE = E.cut_edges
    a, b = space.edges[cutE, 0], space.edges[cutE, 1]
    inner_end = np.where(E.members[a], a, b)
    per_0 = math.fsum(space.face_measures[cutE[foot_mask[inner_end]]])
    factor = equidistant_factor(profile, h)
    # G: vertices on a minimizing path from Gamma to the closure of E
    d = dist.d_to_closure
    G = np.zeros(space.vertex_count, dtype=bool)
    for g in gamma_ids:
        dg = distances_from(space, int(g), limit=d[g] * (1 + SNAP))
        G |= np.abs(dg + d - d[g]) <= SNAP * max(1.0, d[g])
    G &= ~E.members & ~gamma
    ok = profile.contains(d)
    integral = math.fsum(space.masses[G & ok] * profile(d[G & ok]))
    window_feet = bool(np.all(window[feet])) if feet.size else True
    reach_ok = bool(np.all(dist.footpoint[G] >= 0)) and bool(np.all(ok[G]))
    bound = per_0 * factor
    return EquidistantReport(
        float(h), per_h, per_0, factor, bound, per_h - bound,
        per_h / per_0 if per_0 > 0 else math.nan,
        integral, per_h - per_0 - integral, int(gamma.sum()), window_feet, reach_ok,
    )


def enlargement_perimeters(space: MmSpace, E, hs, window=None) -> list:
    """``Per(E^h, window)`` for each ``h`` (``h = 0`` gives ``Per(E, window)``)."""
    dist = distance_profile(space, E)
    out = []
    for h in hs:
        S = dist.base if h == 0 else enlargement(space, dist, h)
        ids = S.cut_edges
        if window is not None:
            w = as_mask(space, window)
            ids = ids[w[space.edges[ids, 0]] | w[space.edges[ids, 1]]]
        out.append(math.fsum(space.face_measures[ids]))
    return out


@dataclass(frozen=True)
class MinkowskiRow:
    eps: float
    shell_mass: float
    minkowski: float  # shell_mass / eps
    perimeter: float
    ratio: float
    sub_resolution: bool


def minkowski_equals_perimeter(space: MmSpace, E, eps_grid, window=None,
                               dist: DistanceProfile | None = None) -> list:
    """``(1/eps) m({x outside E : 0 < d(x, closure E) <= eps})`` against ``Per(E)`` in a window.

    The shell and the perimeter are restricted to vertices (respectively cut
    edges) whose footpoint lies in ``window``.
    """
    dist = dist or distance_profile(space, E)
    E = dist.base
    window = as_mask(space, window)
    d = dist.d_to_closure
    foot_ok = np.zeros(space.vertex_count, dtype=bool)
    has = dist.footpoint >= 0
    foot_ok[has] = window[dist.footpoint[has]]
    cut = E.cut_edges
    a, b = space.edges[cut, 0], space.edges[cut, 1]
    inner_end = np.where(E.members[a], a, b)
    per = math.fsum(space.face_measures[cut[window[inner_end]]])
    rows = []
    for eps in eps_grid:
        shell = ~E.members & (d > 0) & (d <= eps * (1 + SNAP)) & foot_ok
        mass = math.fsum(space.masses[shell])
        mk = mass / eps
        rows.append(MinkowskiRow(float(eps), mass, mk, per, mk / per if per else math.nan, not shell.any()))
    return rows
