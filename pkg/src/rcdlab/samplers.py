"""Finite-volume samplers for the constant-curvature model geometries.

Every sampler builds a weighted graph whose edge weight is
``face_measure / length`` and whose vertex mass is the measure of the dual
cell, so the graph Laplacian is a consistent approximation of the
Laplace-Beltrami operator.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameterError, InvalidSpaceError
from .space import MmSpace

KINDS = ("euclidean_grid", "sphere", "hyperbolic_disc", "circle_cone", "product_line")


@dataclass(frozen=True)
class ModelSpec:
    """Description of a model geometry and its sampling.

    ``extent`` is the side length of a Euclidean grid (centered at the
    origin), the half-width of the hyperbolic chart, the outer radius of a
    cone, and the half-length of the line factor of a product.  ``periodic``
    turns a Euclidean grid into a flat torus.  ``chart`` selects the
    coordinates of the hyperbolic sample: ``"fermi"`` (distance to a
    geodesic) or ``"horocyclic"`` (distance to a horocycle).
    """

    kind: str
    N: int = 2
    K: float = 0.0
    cone_radius: float = 1.0
    resolution: float = 0.1
    extent: float = 1.0
    periodic: bool = False
    chart: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if not (isinstance(self.N, (int, np.integer)) or float(self.N).is_integer()) or self.N < 1:
            raise InvalidParameterError("N must be a positive integer")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "K", float(self.K))
        object.__setattr__(self, "cone_radius", float(self.cone_radius))
        object.__setattr__(self, "resolution", float(self.resolution))
        object.__setattr__(self, "extent", float(self.extent))
        if not self.resolution > 0 or not math.isfinite(self.resolution):
            raise InvalidParameterError("resolution must be positive")
        if not self.extent > 0 or not math.isfinite(self.extent):
            raise InvalidParameterError("extent must be positive")
        if not 0 < self.cone_radius <= 1:
            raise InvalidParameterError("cone_radius must lie in (0, 1]")
        kind = self.kind
        if kind == "euclidean_grid" and self.K != 0:
            raise InvalidParameterError("euclidean_grid requires K = 0")
        if kind == "sphere" and (self.K <= 0 or self.N != 2):
            raise InvalidParameterError("sphere sampler needs K > 0 and N = 2")
        if kind == "hyperbolic_disc":
            if self.K >= 0 or self.N != 2:
                raise InvalidParameterError("hyperbolic_disc sampler needs K < 0 and N = 2")
            if self.chart not in (None, "fermi", "horocyclic"):
                raise InvalidParameterError("hyperbolic chart must be 'fermi' or 'horocyclic'")
        if kind == "circle_cone" and (self.N != 2 or self.K != 0):
            raise InvalidParameterError("circle_cone sampler needs N = 2 and K = 0")
        if kind == "product_line" and (self.N not in (2, 3) or self.K != 0):
            raise InvalidParameterError("product_line sampler needs N in {2, 3} and K = 0")
        if self.periodic and kind != "euclidean_grid":
            raise InvalidParameterError("periodic applies to euclidean_grid only")

    def replace(self, **changes) -> "ModelSpec":
        data = asdict(self)
        data.update(changes)
        return ModelSpec(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class _Parts:
    masses: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray
    weights: np.ndarray
    coords: np.ndarray
    chart: np.ndarray


def _line(n_cells: int, h: float, start: float) -> _Parts:
    """Interval of ``n_cells`` cells with half cells at both ends."""
    n = n_cells + 1
    x = start + h * np.arange(n)
    masses = np.full(n, h)
    masses[0] = masses[-1] = h / 2
    edges = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    lengths = np.full(n - 1, h)
    return _Parts(masses, edges, lengths, 1.0 / lengths, x[:, None], x[:, None])


def _cycle(n: int, h: float) -> _Parts:
    if n < 3:
        raise InvalidSpaceError("a periodic factor needs at least 3 vertices (resolution too coarse)")
    x = h * np.arange(n)
    edges = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    lengths = np.full(n, h)
    return _Parts(np.full(n, h), edges, lengths, 1.0 / lengths, x[:, None], x[:, None])


def _product(a: _Parts, b: _Parts) -> _Parts:
    """Riemannian product; vertex ``(i, j)`` gets index ``i * len(b) + j``."""
    na, nb = len(a.masses), len(b.masses)
    idx = np.arange(na * nb).reshape(na, nb)
    masses = np.outer(a.masses, b.masses).ravel()
    ea = np.concatenate([np.column_stack([idx[a.edges[:, 0], j], idx[a.edges[:, 1], j]]) for j in range(nb)])
    la = np.tile(a.lengths, nb)
    wa = np.concatenate([a.weights * b.masses[j] for j in range(nb)])
    eb = np.concatenate([np.column_stack([idx[i, b.edges[:, 0]], idx[i, b.edges[:, 1]]]) for i in range(na)])
    lb = np.tile(b.lengths, na)
    wb = np.concatenate([b.weights * a.masses[i] for i in range(na)])

    def cat(pa, pb):
        return np.hstack([np.repeat(pa, nb, axis=0), np.tile(pb, (na, 1))])

    return _Parts(
        masses,
        np.vstack([ea, eb]),
        np.concatenate([la, lb]),
        np.concatenate([wa, wb]),
        cat(a.coords, b.coords),
        cat(a.chart, b.chart),
    )


def _cells(extent: float, h: float) -> int:
    n = int(round(extent / h))
    if n < 1:
        raise InvalidSpaceError("resolution too coarse for the requested extent")
    return n


def _euclidean(spec: ModelSpec) -> _Parts:
    n = _cells(spec.extent, spec.resolution)
    h = spec.extent / n
    if spec.periodic:
        factor = _cycle(n, h)
    else:
        factor = _line(n, h, -spec.extent / 2)
    parts = factor
    for _ in range(spec.N - 1):
        parts = _product(parts, factor)
    return parts


def _sphere(spec: ModelSpec) -> _Parts:
    R = 1.0 / math.sqrt(spec.K)
    n_lat = max(4, 2 * int(round(math.pi * R / (2 * spec.resolution))))
    dth = math.pi / n_lat
    n_lon = max(8, 4 * int(round(2 * math.pi * R / (4 * spec.resolution))))
    dph = 2 * math.pi / n_lon
    theta = dth * np.arange(1, n_lat)  # interior latitude rows
    phi = dph * np.arange(n_lon)
    rows = len(theta)
    # vertex 0 is the north pole, then rows, then the south pole
    def vid(i, k):
        return 1 + i * n_lon + (k % n_lon)

    south = 1 + rows * n_lon
    n = south + 1
    masses = np.empty(n)
    cap = 2 * math.pi * R**2 * (1 - math.cos(dth / 2))
    masses[0] = masses[south] = cap
    for i, th in enumerate(theta):
        masses[1 + i * n_lon:1 + (i + 1) * n_lon] = R**2 * dph * (math.cos(th - dth / 2) - math.cos(th + dth / 2))
    edges, lengths, weights = [], [], []
    for k in range(n_lon):
        for pole, row in ((0, 0), (south, rows - 1)):
            edges.append((pole, vid(row, k)))
            lengths.append(R * dth)
            weights.append(R * math.sin(dth / 2) * dph / (R * dth))
    for i in range(rows - 1):
        face = R * math.sin(theta[i] + dth / 2) * dph
        for k in range(n_lon):
            edges.append((vid(i, k), vid(i + 1, k)))
            lengths.append(R * dth)
            weights.append(face / (R * dth))
    for i, th in enumerate(theta):
        arc = R * math.sin(th) * dph
        for k in range(n_lon):
            edges.append((vid(i, k), vid(i, k + 1)))
            lengths.append(arc)
            weights.append(R * dth / arc)
    th_all = np.concatenate([[0.0], np.repeat(theta, n_lon), [math.pi]])
    ph_all = np.concatenate([[0.0], np.tile(phi, rows), [0.0]])
    coords = R * np.column_stack([np.sin(th_all) * np.cos(ph_all), np.sin(th_all) * np.sin(ph_all), np.cos(th_all)])
    # chart: signed latitude distance from the equator and longitude
    chart = np.column_stack([R * (th_all - math.pi / 2), ph_all])
    return _Parts(masses, np.array(edges), np.array(lengths), np.array(weights), coords, chart)


def _hyperbolic(spec: ModelSpec) -> _Parts:
    a = 1.0 / math.sqrt(-spec.K)
    chart_kind = spec.chart or "fermi"
    if chart_kind == "fermi":
        phi = lambda s: np.cosh(s / a)
        phi_int = lambda lo, hi: a * (np.sinh(hi / a) - np.sinh(lo / a))
    else:
        phi = lambda s: np.exp(s / a)
        phi_int = lambda lo, hi: a * (np.exp(hi / a) - np.exp(lo / a))
    L = spec.extent
    n = _cells(2 * L, spec.resolution)
    h = 2 * L / n
    s = -L + h * np.arange(n + 1)
    x = -L + h * np.arange(n + 1)  # arc length along the line s = 0
    lo = np.maximum(s - h / 2, -L)
    hi = np.minimum(s + h / 2, L)
    ds_cell = hi - lo
    dx_cell = np.full(n + 1, h)
    dx_cell[0] = dx_cell[-1] = h / 2
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)  # idx[i_s, j_x]
    masses = np.outer(phi_int(lo, hi), dx_cell).ravel()
    edges, lengths, weights = [], [], []
    for i in range(n):
        face = phi(s[i] + h / 2) * dx_cell
        edges.append(np.column_stack([idx[i], idx[i + 1]]))
        lengths.append(np.full(n + 1, h))
        weights.append(face / h)
    for i in range(n + 1):
        arc = phi(s[i]) * h
        edges.append(np.column_stack([idx[i, :-1], idx[i, 1:]]))
        lengths.append(np.full(n, arc))
        weights.append(np.full(n, ds_cell[i] / arc))
    S, X = np.meshgrid(s, x, indexing="ij")
    S, X = S.ravel(), X.ravel()
    if chart_kind == "fermi":
        coords = a * np.column_stack([np.cosh(S / a) * np.cosh(X / a), np.cosh(S / a) * np.sinh(X / a), np.sinh(S / a)])
    else:
        u, y = X / a, np.exp(-S / a)  # upper half-plane, unit curvature
        coords = a * np.column_stack([(1 + u**2 + y**2) / (2 * y), u / y, (1 - u**2 - y**2) / (2 * y)])
    return _Parts(masses, np.vstack(edges), np.concatenate(lengths), np.concatenate(weights),
                  coords, np.column_stack([S, X]))


def cone_angular_count(h: float, r: float) -> tuple[int, float]:
    """Number of angular sectors of a cone sample and the sector angle."""
    m_full = 4 * max(2, int(round(2 * math.pi / (4 * h))))
    m = max(4, int(round(r * m_full)))
    return m, 2 * math.pi * r / m


def _cone(spec: ModelSpec) -> _Parts:
    r = spec.cone_radius
    n_rings = _cells(spec.extent, spec.resolution)
    h = spec.extent / n_rings
    m, dal = cone_angular_count(h, r)
    rho = h * np.arange(1, n_rings + 1)
    alpha = dal * np.arange(m)
    n = 1 + n_rings * m

    def vid(i, k):
        return 1 + i * m + (k % m)

    masses = np.empty(n)
    masses[0] = (h**2 / 8) * m * dal
    for i, p in enumerate(rho):
        outer = p + h / 2 if i < n_rings - 1 else p
        masses[1 + i * m:1 + (i + 1) * m] = dal * (outer**2 - (p - h / 2) ** 2) / 2
    edges, lengths, weights = [], [], []
    for k in range(m):
        edges.append((0, vid(0, k)))
        lengths.append(h)
        weights.append((h / 2) * dal / h)
    for i in range(n_rings - 1):
        face = (rho[i] + h / 2) * dal
        for k in range(m):
            edges.append((vid(i, k), vid(i + 1, k)))
            lengths.append(h)
            weights.append(face / h)
    for i, p in enumerate(rho):
        radial = h if i < n_rings - 1 else h / 2
        arc = p * dal
        for k in range(m):
            edges.append((vid(i, k), vid(i, k + 1)))
            lengths.append(arc)
            weights.append(radial / arc)
    P = np.concatenate([[0.0], np.repeat(rho, m)])
    A = np.concatenate([[0.0], np.tile(alpha, n_rings)])
    # isometric embedding of the cone as a surface of revolution in R^3
    coords = np.column_stack([P * r * np.cos(A / r), P * r * np.sin(A / r), P * math.sqrt(max(0.0, 1 - r * r))])
    return _Parts(masses, np.array(edges), np.array(lengths), np.array(weights), coords, np.column_stack([P, A]))


def _product_line(spec: ModelSpec) -> _Parts:
    n = _cells(2 * spec.extent, spec.resolution)
    h = 2 * spec.extent / n
    line = _line(n, h, -spec.extent)
    if spec.N == 2:
        m = _cells(2 * spec.extent, spec.resolution)
        fibre = _cycle(max(m, 3), 2 * spec.extent / max(m, 3))
    else:
        fibre = _cone(spec.replace(kind="circle_cone", N=2, resolution=h))
    return _product(line, fibre)


_BUILDERS = {
    "euclidean_grid": _euclidean,
    "sphere": _sphere,
    "hyperbolic_disc": _hyperbolic,
    "circle_cone": _cone,
    "product_line": _product_line,
}


def sample_model(spec: ModelSpec) -> MmSpace:
    """Sample the model geometry described by ``spec`` as an :class:`MmSpace`."""
    parts = _BUILDERS[spec.kind](spec)
    return MmSpace(
        masses=parts.masses,
        edges=parts.edges,
        lengths=parts.lengths,
        weights=parts.weights,
        dimension_hint=spec.N,
        coords=parts.coords,
        chart=parts.chart,
        model=spec,
    )


def nearest_vertex(space: MmSpace, point) -> int:
    """Vertex whose chart coordinates are closest to ``point`` (lowest id on ties)."""
    chart = space.chart if space.chart is not None else space.coords
    if chart is None:
        raise InvalidParameterError("space has no coordinates")
    d = np.sum((chart - np.asarray(point, dtype=float)) ** 2, axis=1)
    return int(np.argmin(d))


def tip_angle_sum(space: MmSpace) -> float:
    """Sum of the apex angles of the sectors incident to the cone tip (vertex 0).

    Uses the embedding coordinates only: the rays to consecutive first-ring
    vertices span an azimuth difference ``dphi`` about the cone axis, and
    the intrinsic sector angle is ``dphi`` times the ratio of the
    horizontal radius to the distance from the tip.
    """
    if space.model is None or space.model.kind != "circle_cone":
        raise InvalidParameterError("tip_angle_sum expects a circle_cone sample")
    tip = space.coords[0]
    ring = space.neighbors(0)
    rel = space.coords[ring] - tip
    az = np.arctan2(rel[:, 1], rel[:, 0])
    order = np.argsort(az)
    az = az[order]
    rel = rel[order]
    gaps = np.diff(np.concatenate([az, [az[0] + 2 * math.pi]]))
    scale = np.hypot(rel[:, 0], rel[:, 1]) / np.linalg.norm(rel, axis=1)
    return float(np.sum(gaps * scale))
