"""Finite metric measure spaces realized as weighted graphs.

A space carries vertex masses, edges with a length (for the metric) and a
weight (for the Laplacian), and optionally embedding coordinates, chart
coordinates and the model description it was sampled from.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.special import gamma as gamma_fn
from scipy import integrate

from .errors import InvalidParameterError, InvalidSpaceError

DENSE_METRIC_LIMIT = 2000


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MmSpace:
    """A connected weighted graph with vertex masses.

    ``edges`` is an ``(E, 2)`` integer array; ``lengths`` and ``weights`` are
    per-edge.  Instances are immutable and validated on construction.
    """

    masses: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray
    weights: np.ndarray
    dimension_hint: float = 2.0
    coords: np.ndarray | None = None
    chart: np.ndarray | None = None
    model: object | None = None

    def __post_init__(self):
        masses = _frozen(self.masses)
        edges = _frozen(np.asarray(self.edges, dtype=np.int64).reshape(-1, 2), dtype=np.int64)
        lengths = _frozen(self.lengths)
        weights = _frozen(self.weights)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "dimension_hint", float(self.dimension_hint))
        for name in ("coords", "chart"):
            val = getattr(self, name)
            if val is not None:
                arr = np.array(val, dtype=float)
                if arr.ndim == 1:
                    arr = arr[:, None]
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        object.__setattr__(self, "_lock", threading.Lock())
        self._validate()

    def _validate(self):
        n = self.masses.shape[0]
        if n < 1:
            raise InvalidSpaceError("space needs at least one vertex")
        if self.masses.ndim != 1 or not np.all(np.isfinite(self.masses)) or np.any(self.masses <= 0):
            raise InvalidSpaceError("masses must be finite and positive")
        m = self.edges.shape[0]
        if self.lengths.shape != (m,) or self.weights.shape != (m,):
            raise InvalidSpaceError("one length and one weight per edge required")
        if m and (self.edges.min() < 0 or self.edges.max() >= n):
            raise InvalidSpaceError("edge endpoint out of range")
        if np.any(self.edges[:, 0] == self.edges[:, 1]):
            raise InvalidSpaceError("self-loops are not allowed")
        for name, arr in (("lengths", self.lengths), ("weights", self.weights)):
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise InvalidSpaceError(f"edge {name} must be finite and positive")
        key = np.sort(self.edges, axis=1)
        if m and np.unique(key, axis=0).shape[0] != m:
            raise InvalidSpaceError("at most one edge per unordered vertex pair")
        if n > 1:
            ncomp, _ = csgraph.connected_components(self.length_matrix, directed=False)
            if ncomp != 1:
                raise InvalidSpaceError(f"graph is disconnected ({ncomp} components)")
        for name in ("coords", "chart"):
            val = getattr(self, name)
            if val is not None and val.shape[0] != n:
                raise InvalidSpaceError(f"{name} must have one row per vertex")

    @property
    def vertex_count(self) -> int:
        return int(self.masses.shape[0])

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @property
    def total_mass(self) -> float:
        return math.fsum(self.masses)

    def _sym(self, values):
        n = self.vertex_count
        u, v = self.edges[:, 0], self.edges[:, 1]
        mat = sparse.coo_matrix(
            (np.concatenate([values, values]), (np.concatenate([u, v]), np.concatenate([v, u]))),
            shape=(n, n),
        )
        return mat.tocsr()

    @cached_property
    def length_matrix(self) -> sparse.csr_matrix:
        return self._sym(self.lengths)

    @cached_property
    def weight_matrix(self) -> sparse.csr_matrix:
        return self._sym(self.weights)

    @cached_property
    def face_measures(self) -> np.ndarray:
        """Per-edge codimension-one measure ``weight * length`` (perimeter weight)."""
        return _frozen(self.weights * self.lengths)

    @cached_property
    def degrees(self) -> np.ndarray:
        return _frozen(np.asarray(self.weight_matrix.sum(axis=1)).ravel())

    @cached_property
    def adjacency(self):
        """CSR arrays ``(indptr, indices, lengths, edge_ids)`` for traversal."""
        n = self.vertex_count
        u, v = self.edges[:, 0], self.edges[:, 1]
        ids = np.arange(self.edge_count)
        mat = sparse.coo_matrix(
            (np.concatenate([ids, ids]) + 1, (np.concatenate([u, v]), np.concatenate([v, u]))),
            shape=(n, n),
        ).tocsr()
        mat.sort_indices()
        edge_ids = mat.data.astype(np.int64) - 1
        return mat.indptr, mat.indices, self.lengths[edge_ids], edge_ids

    def neighbors(self, v: int) -> np.ndarray:
        indptr, indices, _, _ = self.adjacency
        return indices[indptr[v]:indptr[v + 1]]

    def laplacian_matrix(self) -> sparse.csr_matrix:
        """Unnormalized ``W - D``; the weighted Laplacian is ``M^{-1}(W - D)``."""
        return (self.weight_matrix - sparse.diags(self.degrees)).tocsr()

    def apply_laplacian(self, f) -> np.ndarray:
        """``(Lf)(x) = (1/m(x)) sum_y w(x,y) (f(y) - f(x))``."""
        f = np.asarray(f, dtype=float)
        return (self.weight_matrix @ f - self.degrees * f) / self.masses

    def gradient_modulus_sq(self, f) -> np.ndarray:
        """Pointwise ``|grad f|^2 = (1/(2 m(x))) sum_y w(x,y) (f(y) - f(x))^2``."""
        f = np.asarray(f, dtype=float)
        u, v = self.edges[:, 0], self.edges[:, 1]
        contrib = self.weights * (f[u] - f[v]) ** 2
        acc = np.bincount(u, contrib, self.vertex_count) + np.bincount(v, contrib, self.vertex_count)
        return acc / (2.0 * self.masses)

    def to_dict(self) -> dict:
        out = {
            "masses": self.masses.tolist(),
            "edges": [[int(a), int(b), float(l), float(w)]
                      for (a, b), l, w in zip(self.edges, self.lengths, self.weights)],
            "dimension_hint": self.dimension_hint,
        }
        if self.coords is not None:
            out["coords"] = self.coords.tolist()
        if self.chart is not None:
            out["chart"] = self.chart.tolist()
        if self.model is not None and hasattr(self.model, "to_dict"):
            out["model"] = self.model.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MmSpace":
        try:
            masses = data["masses"]
            raw = np.asarray(data["edges"], dtype=float).reshape(-1, 4)
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidSpaceError(f"malformed space description: {exc}") from exc
        if raw.size and np.any(raw[:, :2] != np.round(raw[:, :2])):
            raise InvalidSpaceError("edge endpoints must be integers")
        model = None
        if "model" in data:
            from .samplers import ModelSpec

            model = ModelSpec(**data["model"])
        return cls(
            masses=masses,
            edges=raw[:, :2].astype(np.int64),
            lengths=raw[:, 2],
            weights=raw[:, 3],
            dimension_hint=data.get("dimension_hint", 2.0),
            coords=data.get("coords"),
            chart=data.get("chart"),
            model=model,
        )

    def content_hash(self) -> str:
        """SHA-256 of the canonical JSON description."""
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


def save_space(space: MmSpace, path) -> None:
    with open(path, "w") as fh:
        json.dump(space.to_dict(), fh)


def load_space(path) -> MmSpace:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidSpaceError(f"{path}: not valid JSON ({exc})") from exc
    return MmSpace.from_dict(data)


class Metric:
    """Shortest-path metric of a space.

    Small spaces get a dense all-pairs table on first use; larger ones are
    served by single-source solves, cached per source.
    """

    def __init__(self, space: MmSpace, dense_limit: int = DENSE_METRIC_LIMIT):
        self.space = space
        self.dense = space.vertex_count <= dense_limit
        self._table = None
        self._rows = {}
        self._lock = threading.Lock()

    @property
    def table(self) -> np.ndarray:
        with self._lock:
            if self._table is None:
                t = csgraph.dijkstra(self.space.length_matrix, directed=False)
                # enforce exact symmetry; the two directions of one pair are
                # summed in different orders by the solver
                t = np.minimum(t, t.T)
                t.setflags(write=False)
                self._table = t
            return self._table

    def row(self, u: int) -> np.ndarray:
        if self.dense:
            return self.table[u]
        with self._lock:
            r = self._rows.get(u)
        if r is None:
            r = csgraph.dijkstra(self.space.length_matrix, directed=False, indices=int(u))
            r.setflags(write=False)
            with self._lock:
                if len(self._rows) > 4096:
                    self._rows.clear()
                self._rows[u] = r
        return r

    def __call__(self, u: int, v: int) -> float:
        return float(self.row(u)[v])

    def rows(self, sources: Sequence[int]) -> np.ndarray:
        if self.dense:
            return self.table[np.asarray(sources, dtype=np.int64)]
        return np.vstack([self.row(int(s)) for s in sources])


def metric(space: MmSpace) -> Metric:
    """Return the (cached) distance oracle of ``space``."""
    with space._lock:
        m = space.__dict__.get("_metric")
        if m is None:
            m = Metric(space)
            space.__dict__["_metric"] = m
        return m


def check_vertex(space: MmSpace, v) -> int:
    """Return ``v`` as an int after checking it names a vertex of ``space``."""
    if isinstance(v, (bool, np.bool_)) or not isinstance(v, (int, np.integer)):
        raise InvalidParameterError(f"vertex id must be an integer, got {v!r}")
    if not 0 <= v < space.vertex_count:
        raise InvalidParameterError(f"vertex {v} out of range for {space.vertex_count} vertices")
    return int(v)


def distances_from(space: MmSpace, source: int, limit: float = np.inf) -> np.ndarray:
    """Single-source distances; entries beyond ``limit`` are ``inf``."""
    source = check_vertex(space, source)
    return csgraph.dijkstra(space.length_matrix, directed=False, indices=source, limit=limit)


def multi_source_dijkstra(space: MmSpace, sources, offsets=None, allowed=None):
    """Multi-source shortest paths with lexicographic ``(distance, source)`` labels.

    Every source ``s`` starts with label ``(offset[s], s)``; the returned
    ``origin`` array names, for each vertex, the source attaining the
    minimal label, so ties resolve to the lowest source id.  ``allowed``
    (boolean mask) restricts the vertices that may be visited.
    Unreached vertices get ``inf`` and origin ``-1``.
    """
    n = space.vertex_count
    indptr, indices, lens, _ = space.adjacency
    dist = np.full(n, np.inf)
    origin = np.full(n, -1, dtype=np.int64)
    sources = np.asarray(list(sources), dtype=np.int64)
    if offsets is None:
        offsets = np.zeros(len(sources))
    offsets = np.asarray(offsets, dtype=float)
    heap = []
    for s, off in zip(sources.tolist(), offsets.tolist()):
        if allowed is not None and not allowed[s]:
            continue
        if off < dist[s] or (off == dist[s] and s < origin[s]):
            dist[s] = off
            origin[s] = s
    for s in np.flatnonzero(origin >= 0).tolist():
        heap.append((dist[s], int(origin[s]), s))
    heapq.heapify(heap)
    done = np.zeros(n, dtype=bool)
    indptr_l = indptr.tolist()
    indices_l = indices.tolist()
    lens_l = lens.tolist()
    allowed_l = None if allowed is None else np.asarray(allowed, dtype=bool).tolist()
    dist_l = dist.tolist()
    origin_l = origin.tolist()
    while heap:
        d, o, u = heapq.heappop(heap)
        if done[u] or d != dist_l[u] or o != origin_l[u]:
            continue
        done[u] = True
        for k in range(indptr_l[u], indptr_l[u + 1]):
            v = indices_l[k]
            if done[v] or (allowed_l is not None and not allowed_l[v]):
                continue
            nd = d + lens_l[k]
            if nd < dist_l[v] or (nd == dist_l[v] and o < origin_l[v]):
                dist_l[v] = nd
                origin_l[v] = o
                heapq.heappush(heap, (nd, o, v))
    return np.array(dist_l), np.array(origin_l, dtype=np.int64)


def set_distance(space: MmSpace, vertex_set, allowed=None) -> np.ndarray:
    """Distance from every vertex to a vertex set."""
    idx = np.asarray(sorted(set(int(v) for v in vertex_set)), dtype=np.int64)
    if idx.size == 0:
        return np.full(space.vertex_count, np.inf)
    if allowed is not None:
        return multi_source_dijkstra(space, idx, allowed=allowed)[0]
    return csgraph.dijkstra(space.length_matrix, directed=False, indices=idx, min_only=True)


@dataclass(frozen=True)
class Ball:
    center: int
    radius: float
    members: frozenset

    def mask(self, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=bool)
        out[list(self.members)] = True
        return out


def ball(space: MmSpace, center: int, radius: float) -> Ball:
    """Open ball ``{v : d(center, v) < radius}``."""
    if radius < 0:
        raise InvalidParameterError("radius must be nonnegative")
    d = distances_from(space, center, limit=radius)
    members = frozenset(np.flatnonzero(d < radius).tolist())
    return Ball(int(center), float(radius), members)


def diameter(space: MmSpace) -> float:
    m = metric(space)
    if m.dense:
        return float(m.table.max())
    # double sweep gives a lower bound; exact for trees and fine for reporting
    far = int(np.argmax(m.row(0)))
    return float(m.row(far).max())


def unit_sphere_area(dim: float) -> float:
    """Measure of the unit sphere ``S^{dim-1}`` in ``R^dim``."""
    return 2.0 * math.pi ** (dim / 2.0) / gamma_fn(dim / 2.0)


def model_ball_volume(K: float, N: float, r: float) -> float:
    """Volume of the radius-``r`` ball in the ``(K, N)`` model space."""
    if r <= 0:
        return 0.0
    if N <= 1:
        return 2.0 * r if N == 1 else 0.0
    k = K / (N - 1.0)
    if k > 0:
        r = min(r, math.pi / math.sqrt(k))
        sk = lambda s: math.sin(math.sqrt(k) * s) / math.sqrt(k)
    elif k < 0:
        sk = lambda s: math.sinh(math.sqrt(-k) * s) / math.sqrt(-k)
    else:
        return unit_sphere_area(N) * r ** N / N
    val, _ = integrate.quad(lambda s: sk(s) ** (N - 1.0), 0.0, r, epsabs=0, epsrel=1e-12, limit=200)
    return unit_sphere_area(N) * val


@dataclass(frozen=True)
class BishopGromovReport:
    radii: tuple
    ball_masses: tuple
    model_volumes: tuple
    ratios: tuple
    max_violation: float  # largest relative increase between consecutive radii


def bishop_gromov_ratio(space: MmSpace, x: int, K: float, N: float, radii) -> BishopGromovReport:
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise InvalidParameterError("radii must be positive and increasing")
    d = metric(space).row(x)
    masses, vols, ratios = [], [], []
    for r in radii:
        mb = math.fsum(space.masses[d < r])
        v = model_ball_volume(K, N, r)
        masses.append(mb)
        vols.append(v)
        ratios.append(mb / v)
    viol = 0.0
    for a, b in zip(ratios, ratios[1:]):
        viol = max(viol, b / a - 1.0)
    return BishopGromovReport(tuple(radii), tuple(masses), tuple(vols), tuple(ratios), viol)


def as_mask(space: MmSpace, vertices: Iterable[int] | np.ndarray | None, default=True) -> np.ndarray:
    """Normalize a vertex set (ids or boolean mask) to a boolean mask."""
    n = space.vertex_count
    if vertices is None:
        return np.full(n, bool(default))
    if isinstance(vertices, Ball):
        return vertices.mask(n)
    if isinstance(getattr(vertices, "members", None), np.ndarray):
        vertices = vertices.members  # vertex-set objects carrying a mask
    arr = np.asarray(vertices if not isinstance(vertices, (set, frozenset)) else sorted(vertices))
    if arr.dtype == bool:
        if arr.shape != (n,):
            raise InvalidParameterError("mask length must equal vertex count")
        return arr.copy()
    out = np.zeros(n, dtype=bool)
    if arr.size:
        out[arr.astype(np.int64)] = True
    return out
