"""Discrete sets of finite perimeter and local perimeter minimization by min-cut.

The perimeter of a vertex set is the total face measure ``weight * length``
of the edges it cuts.  ``Per(E, region)`` counts cut edges with at least one
endpoint in the region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx
import numpy as np

from .errors import InvalidParameterError
from .space import Ball, MmSpace, as_mask, ball, set_distance

CAPACITY_BITS = 48


@dataclass(frozen=True)
class PerimeterSet:
    """A vertex set with its cut edges computed from membership."""

    members: np.ndarray  # boolean mask
    cut_edges: np.ndarray  # edge ids with exactly one endpoint in the set
    perimeter_total: float
    inner_boundary: np.ndarray  # members incident to a cut edge
    outer_boundary: np.ndarray  # non-members incident to a cut edge

    @property
    def member_ids(self) -> np.ndarray:
        return np.flatnonzero(self.members)

    def __len__(self):
        return int(self.members.sum())


def make_set(space: MmSpace, members) -> PerimeterSet:
    mask = as_mask(space, members, default=False)
    u, v = space.edges[:, 0], space.edges[:, 1]
    cut = np.flatnonzero(mask[u] != mask[v])
    total = math.fsum(space.face_measures[cut])
    ends = np.concatenate([u[cut], v[cut]])
    inner = np.zeros(space.vertex_count, dtype=bool)
    outer = np.zeros(space.vertex_count, dtype=bool)
    inner[ends[mask[ends]]] = True
    outer[ends[~mask[ends]]] = True
    for arr in (mask, cut, inner, outer):
        arr.setflags(write=False)
    return PerimeterSet(mask, cut, total, inner, outer)


def _as_set(space, E) -> PerimeterSet:
    return E if isinstance(E, PerimeterSet) else make_set(space, E)


def cut_edge_ids(space: MmSpace, E, region=None) -> np.ndarray:
    E = _as_set(space, E)
    if region is None:
        return E.cut_edges
    reg = as_mask(space, region)
    u, v = space.edges[E.cut_edges, 0], space.edges[E.cut_edges, 1]
    return E.cut_edges[reg[u] | reg[v]]


def perimeter(space: MmSpace, E, region=None, density=None) -> float:
    """``Per(E, region)``; ``density`` optionally weights each cut edge by the endpoint average."""
    ids = cut_edge_ids(space, E, region)
    c = space.face_measures[ids]
    if density is not None:
        density = np.asarray(density, dtype=float)
        c = c * 0.5 * (density[space.edges[ids, 0]] + density[space.edges[ids, 1]])
    return math.fsum(c)


def perimeter_shares(space: MmSpace, E, side: str = "outer") -> np.ndarray:
    """Per-vertex share of the perimeter: each cut edge is credited to its endpoint on ``side``."""
    E = _as_set(space, E)
    u, v = space.edges[E.cut_edges, 0], space.edges[E.cut_edges, 1]
    want_member = side == "inner"
    end = np.where(E.members[u] == want_member, u, v)
    return np.bincount(end, space.face_measures[E.cut_edges], space.vertex_count)


@dataclass(frozen=True)
class LocalMinProblem:
    """Minimize the perimeter over configurations agreeing with ``frozen`` off ``free``."""

    space: MmSpace
    free: np.ndarray  # mask of vertices allowed to change
    frozen: np.ndarray  # membership mask; only read outside ``free``
    window: np.ndarray = field(default=None)  # evaluation region for the objective

    def __post_init__(self):
        n = self.space.vertex_count
        free = as_mask(self.space, self.free, default=False)
        frozen = as_mask(self.space, self.frozen, default=False)
        object.__setattr__(self, "free", free)
        object.__setattr__(self, "frozen", frozen)
        if self.window is None:
            win = free.copy()
            u, v = self.space.edges[:, 0], self.space.edges[:, 1]
            win[u[free[v]]] = True
            win[v[free[u]]] = True
            object.__setattr__(self, "window", win)
        else:
            object.__setattr__(self, "window", as_mask(self.space, self.window, default=False))
        if free.shape != (n,):
            raise InvalidParameterError("free mask has the wrong length")

    @classmethod
    def in_ball(cls, space: MmSpace, center: int, radius: float, frozen) -> "LocalMinProblem":
        b = ball(space, center, radius)
        return cls(space, b.mask(space.vertex_count), frozen)

    def objective(self, members) -> float:
        return perimeter(self.space, members, self.window)


def _integer_capacities(c):
    top = float(np.max(c)) if len(c) else 1.0
    # a power-of-two scale keeps dyadic capacities exact and preserves ties
    scale = 2.0 ** (CAPACITY_BITS - math.frexp(top)[1])
    return [int(round(x * scale)) for x in c]


def _source_side(G: nx.DiGraph) -> set:
    """Vertices reachable from ``"s"`` in the residual network of a maximum flow.

    ``networkx.minimum_cut`` reports the complement of the vertices that
    reach the sink, which is the largest minimizing source side; the
    smallest one needs the forward search done here.
    """
    _, flow = nx.maximum_flow(G, "s", "t")
    seen = {"s"}
    stack = ["s"]
    while stack:
        a = stack.pop()
        for b, data in G.succ[a].items():
            if b not in seen and flow[a][b] < data["capacity"]:
                seen.add(b)
                stack.append(b)
        for b in G.pred[a]:
            if b not in seen and flow[b][a] > 0:
                seen.add(b)
                stack.append(b)
    return seen


def minimize_in_ball(problem: LocalMinProblem) -> PerimeterSet:
    """Minimum cut separating frozen members from frozen non-members.

    Among minimizers the smallest set is returned: the vertices reachable
    from the source in the residual network of a maximum flow.
    Capacities are scaled to integers so the flow computation is exact.
    """
    space = problem.space
    free, frozen = problem.free, problem.frozen
    u, v = space.edges[:, 0], space.edges[:, 1]
    touch = np.flatnonzero(free[u] | free[v])
    caps = _integer_capacities(space.face_measures[touch]) if len(touch) else []
    G = nx.DiGraph()
    G.add_node("s")
    G.add_node("t")
    G.add_nodes_from(np.flatnonzero(free).tolist())

    def add(a, b, c):
        if G.has_edge(a, b):
            G[a][b]["capacity"] += c
        else:
            G.add_edge(a, b, capacity=c)

    for e, c in zip(touch.tolist(), caps):
        a, b = int(u[e]), int(v[e])
        fa, fb = free[a], free[b]
        if fa and fb:
            add(a, b, c)
            add(b, a, c)
            continue
        inner, other = (a, b) if fa else (b, a)
        if frozen[other]:
            add("s", inner, c)
        else:
            add(inner, "t", c)
    members = frozen & ~free
    if G.number_of_edges():
        chosen = [x for x in _source_side(G) if x != "s"]
        members = members.copy()
        members[np.asarray(chosen, dtype=np.int64)] = True
    return make_set(space, members)


@dataclass(frozen=True)
class DensityRow:
    center: int
    radius: float
    inside_fraction: float
    outside_fraction: float
    perimeter_ratio: float  # Per(E, B) * r / m(B)


def quasi_min_density_report(space: MmSpace, E, balls) -> list:
    """Volume fractions and scaled perimeter of ``E`` in each ``(center, radius)`` ball."""
    E = _as_set(space, E)
    rows = []
    for item in balls:
        b = item if isinstance(item, Ball) else ball(space, int(item[0]), float(item[1]))
        mask = b.mask(space.vertex_count)
        mb = math.fsum(space.masses[mask])
        ins = math.fsum(space.masses[mask & E.members])
        out = math.fsum(space.masses[mask & ~E.members])
        per = perimeter(space, E, mask)
        rows.append(DensityRow(b.center, b.radius, ins / mb, out / mb, per * b.radius / mb))
    return rows


def tube_volume(space: MmSpace, vertex_set, r: float, window=None) -> float:
    """Mass of the closed tube ``{d(., S) <= r}`` (optionally intersected with ``window``).

    Distances equal to ``r`` up to a relative 1e-12 count as inside, so a
    radius that is an exact multiple of the mesh is not lost to rounding.
    """
    if r < 0:
        raise InvalidParameterError("r must be nonnegative")
    mask = as_mask(space, vertex_set, default=False)
    if not mask.any():
        return 0.0
    d = set_distance(space, np.flatnonzero(mask))
    inside = d <= r * (1 + 1e-12)
    if window is not None:
        inside &= as_mask(space, window)
    return math.fsum(space.masses[inside])


@dataclass(frozen=True)
class CutPasteReport:
    per_E: float
    per_F: float
    per_intersection: float
    per_union: float
    per_difference: float
    slack: float  # Per(E) + Per(F) - Per(E n F) - Per(E u F), exactly rounded
    shared_cut_edges: int
    same_orientation: int  # shared cut edges with E and F on the same side
    opposite_orientation: int


def cut_and_paste_checks(space: MmSpace, E, F) -> CutPasteReport:
    E = _as_set(space, E)
    F = _as_set(space, F)
    inter = make_set(space, E.members & F.members)
    union = make_set(space, E.members | F.members)
    diff = make_set(space, E.members & ~F.members)
    c = space.face_measures
    slack = math.fsum(
        list(c[E.cut_edges]) + list(c[F.cut_edges]) + list(-c[inter.cut_edges]) + list(-c[union.cut_edges])
    )
    shared = np.intersect1d(E.cut_edges, F.cut_edges)
    u = space.edges[shared, 0]
    same = int(np.sum(E.members[u] == F.members[u]))
    return CutPasteReport(
        E.perimeter_total, F.perimeter_total, inter.perimeter_total, union.perimeter_total,
        diff.perimeter_total, slack, int(len(shared)), same, int(len(shared)) - same,
    )


@dataclass(frozen=True)
class CoareaReport:
    total_variation: float  # sum over edges of fbar * c * |dv|
    level_integral: float  # integral over r of Per_f({v > r})
    difference: float
    levels: int


def coarea_check(space: MmSpace, v, f=None, exact: bool | None = None) -> CoareaReport:
    """Compare the weighted total variation of ``v`` with the integral of its level-set perimeters.

    The level integral is a finite sum over consecutive distinct values of
    ``v``.  With ``exact=True`` (default for small graphs) both sides are
    accumulated in rational arithmetic, so the identity is checked exactly.
    """
    v = np.asarray(v, dtype=float)
    f = np.ones(space.vertex_count) if f is None else np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise InvalidParameterError("weight field must be nonnegative")
    if exact is None:
        exact = space.edge_count <= 5000
    a, b = space.edges[:, 0], space.edges[:, 1]
    lo, hi = np.minimum(v[a], v[b]), np.maximum(v[a], v[b])
    levels = np.unique(v)
    if exact:
        F = Fraction
        wt = [F(float(c)) * (F(float(f[x])) + F(float(f[y]))) / 2
              for c, x, y in zip(space.face_measures, a, b)]
        tv = sum((w * (F(float(h)) - F(float(l))) for w, l, h in zip(wt, lo, hi)), F(0))
        integral = F(0)
        for r0, r1 in zip(levels[:-1], levels[1:]):
            cut = np.flatnonzero((lo <= r0) & (hi > r0))
            per = sum((wt[e] for e in cut), F(0))
            integral += per * (F(float(r1)) - F(float(r0)))
        return CoareaReport(float(tv), float(integral), float(abs(tv - integral)), len(levels))
    wt = space.face_measures * 0.5 * (f[a] + f[b])
    tv = math.fsum(wt * (hi - lo))
    terms = []
    for r0, r1 in zip(levels[:-1], levels[1:]):
        cut = (lo <= r0) & (hi > r0)
        terms.append(math.fsum(wt[cut]) * (r1 - r0))
    integral = math.fsum(terms)
    return CoareaReport(tv, integral, abs(tv - integral), len(levels))
