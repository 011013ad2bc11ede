"""Flatness estimates, singular-point scans and tube-mass experiments.

The distance between a ball and its flat model is estimated with a
bounded-distortion correspondence between two finite samples: ``k`` points of
the ball and ``k`` points of the reference ball.  Any bijection between the
samples is a correspondence, so half its distortion bounds the
Gromov-Hausdorff distance between the two samples from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csgraph

from .errors import InvalidParameterError
from .perimeter import make_set, perimeter, tube_volume
from .samplers import ModelSpec, sample_model
from .space import MmSpace, as_mask, distances_from

SAMPLE_SIZE = 64
IMPROVE_ROUNDS = 200


@lru_cache(maxsize=8)
def reference_space(spec: ModelSpec) -> MmSpace:
    """Sampled reference model, cached per specification."""
    return sample_model(spec)


def flat_reference(spec: ModelSpec) -> ModelSpec:
    """Smooth model matching ``spec``: the cone angle is opened to a full turn."""
    if spec.kind in ("circle_cone", "product_line"):
        return spec.replace(cone_radius=1.0)
    return spec


def _wrap(a, period):
    return (a + period / 2) % period - period / 2


def developed_coords(space: MmSpace, center: int, verts: np.ndarray) -> np.ndarray:
    """Local flat coordinates of ``verts`` around ``center``.

    Polar charts are unrolled about the center's angle, so a neighbourhood
    that avoids the cone tip is mapped isometrically onto a flat sector.
    """
    spec = space.model
    chart = space.chart if space.chart is not None else space.coords
    if chart is None:
        return np.asarray(verts, dtype=float)[:, None]
    c = chart[verts]
    if spec is None:
        return c - chart[center]
    if spec.kind == "circle_cone" or (spec.kind == "product_line" and spec.N == 3):
        off = 0 if spec.kind == "circle_cone" else 1
        rho, alpha = c[:, off], c[:, off + 1]
        da = _wrap(alpha - chart[center, off + 1], 2 * math.pi * spec.cone_radius)
        plane = np.column_stack([rho * np.cos(da), rho * np.sin(da)])
        if off:
            return np.column_stack([c[:, 0] - chart[center, 0], plane])
        return plane
    rel = c - chart[center]
    if spec.kind == "sphere":
        rel[:, 1] = _wrap(rel[:, 1], 2 * math.pi)
    if spec.kind == "product_line" and spec.N == 2:
        rel[:, 1] = _wrap(rel[:, 1], 2 * spec.extent)
    if spec.kind == "euclidean_grid" and spec.periodic:
        rel = _wrap(rel, spec.extent)
    return rel


def reference_center(space: MmSpace, x: int, ref: MmSpace) -> int:
    """Vertex of ``ref`` playing the role of ``x``: same chart position, angle reset to zero."""
    chart = space.chart if space.chart is not None else space.coords
    rchart = ref.chart if ref.chart is not None else ref.coords
    target = np.array(chart[x], dtype=float)
    spec = space.model
    if spec is not None and (spec.kind == "circle_cone" or (spec.kind == "product_line" and spec.N == 3)):
        target[-1] = 0.0
    if rchart.shape[1] != target.shape[0]:
        # different chart types: match the developed position of x relative to the origin
        dim = rchart.shape[1]
        target = np.resize(target, dim) * 0
    return int(np.argmin(np.sum((rchart - target) ** 2, axis=1)))


def _fps(dev: np.ndarray, k: int) -> np.ndarray:
    """Farthest-point sampling in developed coordinates, starting at the center (row 0).

    Ties are broken by the lexicographic order of the rounded coordinates, so
    isometric neighbourhoods with matching developed coordinates yield
    corresponding samples.
    """
    n = dev.shape[0]
    k = min(k, n)
    key = np.lexsort(np.round(dev, 9).T[::-1])
    rank = np.empty(n, dtype=np.int64)
    rank[key] = np.arange(n)
    chosen = [0]
    dmin = np.sum((dev - dev[0]) ** 2, axis=1)
    for _ in range(k - 1):
        top = np.max(dmin)
        cand = np.flatnonzero(dmin >= top - 1e-12 * max(1.0, top))
        nxt = int(cand[np.argmin(rank[cand])])
        chosen.append(nxt)
        dmin = np.minimum(dmin, np.sum((dev - dev[nxt]) ** 2, axis=1))
    return np.array(chosen)


@dataclass
class _BallSample:
    vertices: np.ndarray  # sampled vertex ids, center first
    dist: np.ndarray  # pairwise distances among samples
    dev: np.ndarray  # developed coordinates of the samples
    members: np.ndarray  # E-membership of the samples (or None)


def _ball_and_subgraph(space: MmSpace, x: int, r: float):
    d = distances_from(space, x, limit=2 * r)
    near = np.flatnonzero(d < 2 * r)
    ball = near[d[near] < r]
    return d, near, ball


def _sample(space: MmSpace, x: int, r: float, pool_mask, k: int, members=None):
    d, near, ball = _ball_and_subgraph(space, x, r)
    if pool_mask is not None:
        ball = ball[pool_mask[ball]]
    if x in ball:
        ball = np.concatenate([[x], ball[ball != x]])
    if len(ball) == 0:
        return None
    dev = developed_coords(space, x, ball)
    pick = _fps(dev - dev[0], k)
    verts = ball[pick]
    sub = space.length_matrix[near][:, near]
    pos = np.searchsorted(near, verts)
    dist = csgraph.dijkstra(sub, directed=False, indices=pos, limit=2 * r * (1 + 1e-9))[:, pos]
    if not np.all(np.isfinite(dist)):
        dist = csgraph.dijkstra(sub, directed=False, indices=pos)[:, pos]
    dist = np.minimum(dist, dist.T)
    mem = None if members is None else members[verts]
    return _BallSample(verts, dist, dev[pick] - dev[0], mem)


def _distortion_matrix(A, B, perm):
    return np.abs(A - B[np.ix_(perm, perm)])


def _swap_scores(A, B, perm, D, a):
    """Max distortion after swapping ``perm[a]`` with ``perm[c]``, for every ``c`` at once."""
    n = len(perm)
    Bp = B[np.ix_(perm, perm)]  # Bp[i, j] = B[perm[i], perm[j]]
    # row a after the swap: B[perm[c], perm[j]] against A[a, j]
    row_a = np.abs(A[a][None, :] - Bp)  # indexed [c, j]
    # row c after the swap: B[perm[a], perm[j]] against A[c, j]
    row_c = np.abs(A - Bp[a][None, :])
    cols = np.arange(n)
    row_a[cols, cols] = 0.0  # j = c maps to (perm[c], perm[a]): handled below
    row_a[:, a] = 0.0
    row_c[:, a] = 0.0
    row_c[cols, cols] = 0.0
    cross = np.abs(A[a] - Bp[:, a])  # pair (a, c) after the swap, by symmetry
    moved = np.maximum(np.maximum(row_a.max(axis=1), row_c.max(axis=1)), cross)
    # largest untouched entry: outside rows and columns a and c
    order = np.argsort(-D, axis=None)[: 4 * n + 4]
    ti, tj = np.divmod(order, n)
    keep = (ti != a) & (tj != a)
    ti, tj, tv = ti[keep], tj[keep], D.ravel()[order][keep]
    ok = (ti[None, :] != cols[:, None]) & (tj[None, :] != cols[:, None])
    first = np.argmax(ok, axis=1)
    rest = np.where(ok.any(axis=1), tv[first] if tv.size else 0.0, 0.0)
    out = np.maximum(moved, rest)
    out[a] = np.inf
    return out


def _improve(A, B, perm, rounds=IMPROVE_ROUNDS):
    """Swap-based local search lowering the max distortion of ``perm``."""
    perm = perm.copy()
    D = _distortion_matrix(A, B, perm)
    best = D.max()
    for _ in range(rounds):
        if best == 0:
            break
        i, j = np.unravel_index(np.argmax(D), D.shape)
        move = None
        for a in (int(i), int(j)):
            scores = _swap_scores(A, B, perm, D, a)
            c = int(np.argmin(scores))
            if scores[c] < best:
                move = (a, c)
                break
        if move is None:
            break
        a, c = move
        perm[a], perm[c] = perm[c], perm[a]
        D = _distortion_matrix(A, B, perm)
        best = D.max()
    return perm, float(best)


def _match(sa: _BallSample, sb: _BallSample, improve=True):
    """Best bijection found between two equal-size samples; returns ``(perm, distortion)``."""
    k = min(len(sa.vertices), len(sb.vertices))
    A = sa.dist[:k, :k]
    B = sb.dist[:k, :k]
    da, db = sa.dev[:k], sb.dev[:k]
    dim = min(da.shape[1], db.shape[1])
    starts = []
    cost = np.sum((da[:, None, :dim] - db[None, :, :dim]) ** 2, axis=2)
    starts.append(linear_sum_assignment(cost)[1])
    # second start: match by distance-to-center profile
    prof = np.abs(A[0][:, None] - B[0][None, :])
    starts.append(linear_sum_assignment(prof)[1])
    best_perm, best = None, math.inf
    for perm in starts:
        val = float(_distortion_matrix(A, B, perm).max())
        if val < best:
            best_perm, best = perm, val
    if improve and best > 0:
        for perm in starts:
            p, val = _improve(A, B, perm)
            if val < best:
                best_perm, best = p, val
    return best_perm, best


@dataclass(frozen=True)
class FlatnessReport:
    center: int
    scale: float
    gh_estimate: float
    boundary_gh_estimate: float
    l1_closeness: float
    sample_size: int

    def worst(self) -> float:
        return max(self.gh_estimate, self.boundary_gh_estimate, self.l1_closeness)


def _halfspace_mismatch(members, dev_ref):
    """Smallest mismatch fraction between ``members`` and a coordinate half-space of the reference."""
    best = 1.0
    k = len(members)
    for axis in range(dev_ref.shape[1]):
        vals = dev_ref[:, axis]
        cuts = np.unique(np.concatenate([vals, [vals.min() - 1, vals.max() + 1]]))
        mids = (cuts[:-1] + cuts[1:]) / 2
        for sign in (1.0, -1.0):
            inside = (sign * vals[None, :]) < (sign * mids[:, None])
            wrong = np.sum(inside != members[None, :], axis=1)
            best = min(best, float(wrong.min()) / k)
    return best


def flatness(space: MmSpace, E, x: int, r: float, reference: ModelSpec | None = None,
             sample_size: int = SAMPLE_SIZE, ambient_only: bool = False,
             stop_above: float | None = None) -> FlatnessReport:
    """Estimate how far ``B_r(x)`` (and ``E`` inside it) is from the flat model at scale ``r``.

    ``gh_estimate`` compares the ball with the reference ball;
    ``boundary_gh_estimate`` compares the inner boundary of ``E`` in the ball
    with the boundary of the best coordinate half-space of the reference;
    ``l1_closeness`` is ``r`` times the fraction of sample points whose
    membership disagrees with that half-space.  ``stop_above`` lets callers
    skip the set-dependent entries once the ambient entry exceeds it.
    """
    if reference is None:
        if space.model is None:
            raise InvalidParameterError("a reference model is required for spaces without a model")
        reference = flat_reference(space.model)
    ref = reference_space(reference)
    xr = reference_center(space, x, ref)
    sa = _sample(space, x, r, None, sample_size, None if E is None else as_mask(space, E))
    if sa is None or len(sa.vertices) < 4:
        raise InvalidParameterError("ball too small: fewer than 4 vertices")
    sb = _sample(ref, xr, r, None, len(sa.vertices))
    if sb is None or len(sb.vertices) < 4:
        raise InvalidParameterError("reference ball too small")
    k = min(len(sa.vertices), len(sb.vertices))
    perm, dis = _match(sa, sb)
    gh = dis / 2
    bgh = l1 = 0.0
    if E is not None and not ambient_only and (stop_above is None or gh <= stop_above):
        mem = sa.members[:k]
        l1 = r * _halfspace_mismatch(mem, sb.dev[:k][perm])
        Eset = make_set(space, E)
        ref_half = _reference_halfspace(ref, xr, mem, sb, perm, k)
        pool_a = Eset.inner_boundary
        if pool_a[_ball_and_subgraph(space, x, r)[2]].sum() >= 2 and ref_half is not None:
            ta = _sample(space, x, r, pool_a, sample_size)
            rb = make_set(ref, ref_half).inner_boundary
            tb = _sample(ref, xr, r, rb, len(ta.vertices)) if rb.any() else None
            if tb is not None and len(tb.vertices) >= 2:
                m = min(len(ta.vertices), len(tb.vertices))
                ta.vertices, ta.dist, ta.dev = ta.vertices[:m], ta.dist[:m, :m], ta.dev[:m]
                tb.vertices, tb.dist, tb.dev = tb.vertices[:m], tb.dist[:m, :m], tb.dev[:m]
                bgh = _match(ta, tb)[1] / 2
    return FlatnessReport(int(x), float(r), float(gh), float(bgh), float(l1), int(k))


def _reference_halfspace(ref: MmSpace, xr: int, members, sb: _BallSample, perm, k):
    """Coordinate half-space of the reference best matching the mapped membership, as a vertex mask."""
    dev_all = developed_coords(ref, xr, np.arange(ref.vertex_count))
    dev_s = sb.dev[:k][perm]
    best = None
    for axis in range(dev_s.shape[1]):
        vals = dev_s[:, axis]
        cuts = np.unique(np.concatenate([vals, [vals.min() - 1, vals.max() + 1]]))
        mids = (cuts[:-1] + cuts[1:]) / 2
        for sign in (1.0, -1.0):
            inside = (sign * vals[None, :]) < (sign * mids[:, None])
            wrong = np.sum(inside != members[None, :], axis=1)
            j = int(np.argmin(wrong))
            if best is None or wrong[j] < best[0]:
                best = (int(wrong[j]), axis, sign, mids[j])
    if best is None:
        return None
    _, axis, sign, c = best
    half = sign * dev_all[:, axis] < sign * c
    if half.all() or not half.any():
        return None
    return half


@dataclass(frozen=True)
class SingularScanResult:
    delta: float
    r_grid: tuple
    flagged: frozenset
    scores: dict  # vertex -> min over scales of worst entry / r
    tube_masses: dict  # scale -> mass of the closed r-tube around the flagged set
    ambient_only: bool = False


def point_score(space: MmSpace, E, x: int, r_grid, reference=None, ambient_only=False,
                sample_size: int = SAMPLE_SIZE) -> float:
    """``min_r max(entries)/r`` over resolvable scales; 0 ends the search early."""
    best = math.inf
    for r in sorted(r_grid):
        try:
            rep = flatness(space, E, x, r, reference, sample_size, ambient_only)
        except InvalidParameterError:
            continue
        best = min(best, rep.worst() / r)
        if best == 0:
            break
    return best


def classify_points(space: MmSpace, E, delta: float, r_grid, reference=None, candidates=None,
                    ambient_only: bool = False, scores: dict | None = None,
                    sample_size: int = SAMPLE_SIZE) -> SingularScanResult:
    """Flag boundary points admitting no scale in ``r_grid`` where all flatness entries are ``<= delta r``.

    ``scores`` from an earlier scan may be passed to re-threshold at a new
    ``delta`` without recomputation.
    """
    r_grid = tuple(sorted((float(r) for r in r_grid), reverse=True))
    if not r_grid:
        raise InvalidParameterError("r_grid must be nonempty")
    if scores is None:
        if candidates is None:
            E_set = make_set(space, E)
            candidates = np.flatnonzero(E_set.inner_boundary)
        scores = {}
        for x in np.asarray(candidates, dtype=np.int64).tolist():
            scores[int(x)] = point_score(space, None if ambient_only else E, x, r_grid, reference,
                                         ambient_only, sample_size)
    flagged = frozenset(v for v, s in scores.items() if s > delta)
    tubes = {}
    for r in r_grid:
        tubes[r] = tube_volume(space, sorted(flagged), r) if flagged else 0.0
    return SingularScanResult(float(delta), r_grid, flagged, dict(scores), tubes, ambient_only)


@dataclass(frozen=True)
class TubeEstimate:
    scales: tuple
    masses: tuple
    slope: float | None  # log-log slope of mass against r
    constant: float | None  # max mass / r^(2 - gamma)
    gamma: float


def tube_estimate_experiment(space: MmSpace, scan: SingularScanResult, gamma: float, scales=None,
                             window=None) -> TubeEstimate:
    """Masses of ``T_r(flagged)`` inside ``window`` and their log-log slope."""
    scales = tuple(sorted(scan.r_grid if scales is None else scales))
    flagged = sorted(scan.flagged)
    masses = tuple(tube_volume(space, flagged, r, window) if flagged else 0.0 for r in scales)
    slope = constant = None
    pos = [(r, m) for r, m in zip(scales, masses) if m > 0]
    if len(pos) >= 3:
        lr = np.log([p[0] for p in pos])
        lm = np.log([p[1] for p in pos])
        slope = float(np.polyfit(lr, lm, 1)[0])
        constant = float(max(m / r ** (2 - gamma) for r, m in pos))
    return TubeEstimate(scales, masses, slope, constant, float(gamma))


@dataclass(frozen=True)
class RatioMonotonicity:
    radii: tuple
    ratios: tuple
    max_drop: float  # largest relative decrease between consecutive radii


def perimeter_ratio_monotonicity(space: MmSpace, E, x: int, r_grid, N: float | None = None,
                                 min_radius: float | None = None) -> RatioMonotonicity:
    """``Per(E, B_r(x)) / r^(N-1)`` for each resolvable radius, with the worst decrease."""
    N = space.dimension_hint if N is None else N
    if min_radius is None:
        min_radius = 2 * float(space.lengths.min())
    radii = tuple(sorted(float(r) for r in r_grid if r >= min_radius))
    E = make_set(space, E)
    d = distances_from(space, x, limit=max(radii) if radii else 0.0)
    ratios = []
    for r in radii:
        ratios.append(perimeter(space, E, d < r) / r ** (N - 1))
    drop = 0.0
    for a, b in zip(ratios, ratios[1:]):
        if a > 0:
            drop = max(drop, (a - b) / a)
    return RatioMonotonicity(radii, tuple(ratios), drop)
