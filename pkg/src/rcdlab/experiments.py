"""Named experiments that turn the library into measured numbers.

Every experiment takes a context (model, resolutions, random generator) and
a parameter mapping and returns scalar metrics plus optional row tables.
The harness wires them to scenario files; the acceptance tests call them
through the same scenarios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .comparison import (
    ComparisonProfile,
    boundary_representation_report,
    distance_profile,
    equidistant_perimeter_check,
    laplacian_comparison_report,
    t_KN,
)
from .errors import InvalidParameterError
from .green import green_distance_check, green_function
from .heat import HeatOperator
from .hopf_lax import c_transform, hopf_lax, kuwada_check, lipschitz_excess, preservation_experiment
from .laplacian_bounds import cross_validate_senses
from .oracles import brute_hopf_lax, brute_min_cut, comparison_by_ode, floyd_warshall_metric
from .perimeter import LocalMinProblem, make_set, minimize_in_ball, perimeter
from .regularity import classify_points, point_score, tube_estimate_experiment
from .samplers import ModelSpec, nearest_vertex, sample_model
from .space import MmSpace, ball

OPERATIONS: dict = {}


@dataclass
class Context:
    model: ModelSpec | None
    resolutions: tuple
    rng: np.random.Generator


@dataclass
class Outcome:
    metrics: dict
    tables: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Operation:
    name: str
    func: object
    metrics: tuple


def operation(name: str, metrics: tuple):
    def wrap(func):
        OPERATIONS[name] = Operation(name, func, tuple(metrics))
        return func

    return wrap


def _model(ctx: Context, params: dict, **overrides) -> ModelSpec:
    if "model" in params:
        spec = ModelSpec(**params["model"])
    elif ctx.model is not None:
        spec = ctx.model
    else:
        raise InvalidParameterError("experiment needs a model")
    return spec.replace(**overrides) if overrides else spec


def _resolutions(ctx: Context, params: dict) -> tuple:
    res = tuple(params.get("resolutions", ctx.resolutions))
    if len(res) < 2:
        raise InvalidParameterError("experiment needs two resolutions")
    return res[0], res[1]


def random_connected_space(rng: np.random.Generator, n: int, extra: int = 0, dyadic: int | None = None,
                           masses: bool = True) -> MmSpace:
    """Random tree plus ``extra`` chords.

    With ``dyadic=k`` lengths and weights are multiples of ``1/2^k`` in
    ``[1/2^k, 2]``, so sums and products of a few of them are exact.
    """
    edges = set()
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.add((u, v))
    tries = 0
    while len(edges) < n - 1 + extra and tries < 20 * (extra + 1):
        tries += 1
        u, v = sorted(int(a) for a in rng.integers(0, n, size=2))
        if u != v:
            edges.add((u, v))
    edges = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
    m = len(edges)
    if dyadic is None:
        lengths = rng.uniform(0.5, 1.5, m)
        weights = rng.uniform(0.5, 1.5, m)
        mass = rng.uniform(0.5, 1.5, n) if masses else np.ones(n)
    else:
        q = 2.0**dyadic
        lengths = rng.integers(1, int(2 * q) + 1, m) / q
        weights = rng.integers(1, int(2 * q) + 1, m) / q
        mass = rng.integers(1, int(2 * q) + 1, n) / q if masses else np.ones(n)
    return MmSpace(mass, edges, lengths, weights)


@lru_cache(maxsize=16)
def _sample(spec: ModelSpec) -> MmSpace:
    return sample_model(spec)


def _rel(a, b) -> float:
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


@operation("heat_exactness", ("mass_residual", "stochastic_residual", "semigroup_residual", "graphs"))
def heat_exactness(ctx: Context, params: dict) -> Outcome:
    """Mass conservation, ``P_t 1 = 1`` and ``P_{s+t} = P_s P_t`` on random graphs and model samples."""
    count = int(params.get("graphs", 20))
    top = int(params.get("max_vertices", 200))
    times = [float(t) for t in params.get("times", (0.05, 0.5, 2.0))]
    spaces = []
    for _ in range(count):
        n = int(ctx.rng.integers(2, top + 1))
        spaces.append(random_connected_space(ctx.rng, n, extra=int(ctx.rng.integers(0, n + 1))))
    for spec in params.get("models", ()):
        spaces.append(_sample(ModelSpec(**spec)))
    mass = stoch = semi = 0.0
    rows = []
    for space in spaces:
        if space.vertex_count > top:
            raise InvalidParameterError(f"sample has {space.vertex_count} vertices, above {top}")
        op = HeatOperator(space, method="exact")
        f = ctx.rng.normal(size=space.vertex_count)
        one = np.ones(space.vertex_count)
        total = float(np.sum(space.masses * f))
        scale = max(1.0, float(np.sum(space.masses * np.abs(f))))
        m_res = s_res = g_res = 0.0
        for t in times:
            pt = op.apply(f, t)
            m_res = max(m_res, abs(float(np.sum(space.masses * pt)) - total) / scale)
            s_res = max(s_res, float(np.max(np.abs(op.apply(one, t) - 1.0))))
            for s in times:
                g_res = max(g_res, _rel(op.apply(op.apply(f, t), s), op.apply(f, s + t)))
        rows.append({"vertices": space.vertex_count, "edges": space.edge_count, "mass_residual": m_res,
                     "stochastic_residual": s_res, "semigroup_residual": g_res})
        mass, stoch, semi = max(mass, m_res), max(stoch, s_res), max(semi, g_res)
    return Outcome({"mass_residual": mass, "stochastic_residual": stoch, "semigroup_residual": semi,
                    "graphs": len(spaces)}, {"heat_exactness": rows})


@operation("laplacian_senses", ("heat_agreement", "comparison_agreement", "ambiguous", "cases"))
def laplacian_senses(ctx: Context, params: dict) -> Outcome:
    """Distributional, heat-flow and comparison verdicts on random fields over a small grid."""
    spec = _model(ctx, params)
    space = _sample(spec)
    cases = int(params.get("cases", 50))
    coords = space.coords
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    region = np.all((coords > lo + 1e-9) & (coords < hi - 1e-9), axis=1)
    fields, etas = [], []
    for k in range(cases):
        f = ctx.rng.normal(size=space.vertex_count)
        top = float(np.max(space.apply_laplacian(f)[region]))
        # every fifth case sits exactly on the threshold
        offset = 0.0 if k % 5 == 0 else float(ctx.rng.uniform(-0.5, 0.5)) * max(1.0, abs(top))
        fields.append(f)
        etas.append(top + offset)
    cv = cross_validate_senses(space, fields, etas, region)
    rows = [{"case": i, "distributional": v[0], "heat_flow": v[1], "comparison": v[2], "margin": m}
            for i, (v, m) in enumerate(zip(cv.verdicts, cv.margins))]
    return Outcome({"heat_agreement": cv.heat_agreement, "comparison_agreement": cv.comparison_agreement,
                    "ambiguous": cv.ambiguous, "cases": cv.cases}, {"verdicts": rows})


@operation("hopf_lax_exactness", ("value_mismatches", "argmin_mismatches", "lipschitz_excess",
                                  "idempotence_mismatches", "graphs"))
def hopf_lax_exactness(ctx: Context, params: dict) -> Outcome:
    """Accelerated ``p = 1`` transform against a Floyd-Warshall scan on random dyadic graphs."""
    count = int(params.get("graphs", 100))
    top = int(params.get("max_vertices", 50))
    bits = int(params.get("dyadic_bits", 3))
    vals = args = idem = 0
    lip = -math.inf
    for _ in range(count):
        n = int(ctx.rng.integers(2, top + 1))
        space = random_connected_space(ctx.rng, n, extra=int(ctx.rng.integers(0, 2 * n)), dyadic=bits)
        f = ctx.rng.integers(-8 * 2**bits, 8 * 2**bits + 1, n) / 2.0**bits
        res = hopf_lax(space, f, 1.0)
        ref_vals, ref_arg = brute_hopf_lax(space, f, 1.0, table=floyd_warshall_metric(space))
        vals += int(np.sum(res.values != ref_vals))
        args += int(np.sum(res.argmin != ref_arg))
        lip = max(lip, lipschitz_excess(space, res.values))
        idem += int(np.sum(c_transform(space, res.values).values != res.values))
    return Outcome({"value_mismatches": vals, "argmin_mismatches": args, "lipschitz_excess": lip,
                    "idempotence_mismatches": idem, "graphs": count})


@operation("kuwada", ("max_violation",))
def kuwada(ctx: Context, params: dict) -> Outcome:
    """Kuwada duality violations over all pairs on a flat torus."""
    spec = _model(ctx, params)
    space = _sample(spec)
    op = HeatOperator(space, method="exact")
    K = float(params.get("K", spec.K))
    s_grid = [float(s) for s in params.get("s_grid", (0.05, 0.1, 0.2))]
    rows = []
    worst = -math.inf
    for p in params.get("p", (1, 2)):
        for trial in range(int(params.get("fields", 3))):
            f = ctx.rng.uniform(0.0, 2.0, space.vertex_count)
            rep = kuwada_check(space, op, f, float(p), K, s_grid)
            worst = max(worst, rep.max_violation)
            rows.append({"p": float(p), "field": trial, "max_violation": rep.max_violation,
                         "x": rep.worst[0], "y": rep.worst[1], "s": rep.worst[2]})
    return Outcome({"max_violation": worst}, {"kuwada": rows})


def _torus_preservation(spec: ModelSpec, amplitude: float, r_omega: float, r_prime: float):
    space = _sample(spec)
    L = spec.extent
    x, y = space.coords[:, 0], space.coords[:, 1]
    # a valley at the center: steep flanks make the transform differ from f
    f = -amplitude * (np.cos(2 * math.pi * x / L) + np.cos(2 * math.pi * y / L))
    center = nearest_vertex(space, np.zeros(space.coords.shape[1]))
    omega = ball(space, center, r_omega).mask(space.vertex_count)
    eta = float(np.max(space.apply_laplacian(f)[omega]))
    arg = c_transform(space, f).argmin
    prime = ball(space, center, r_prime).mask(space.vertex_count) & omega[arg]
    return preservation_experiment(space, f, omega, prime, eta, spec.K), space


@operation("preservation", ("excess_coarse", "excess_fine", "improves"))
def preservation(ctx: Context, params: dict) -> Outcome:
    """Laplacian bound of the c-transform on a flat torus at two resolutions."""
    base = _model(ctx, params)
    h1, h2 = _resolutions(ctx, params)
    amp = float(params.get("amplitude", 1.0))
    r_om = float(params.get("omega_radius", 0.8))
    r_pr = float(params.get("prime_radius", 0.4))
    tol = float(params.get("roundoff", 1e-10))
    rows, ex = [], []
    for h in (h1, h2):
        rep, space = _torus_preservation(base.replace(resolution=h), amp, r_om, r_pr)
        ex.append(rep.excess)
        rows.append({"h": h, "vertices": space.vertex_count, "excess": rep.excess, "eta": rep.eta,
                     "curvature_shift": rep.curvature_shift, "unchanged": rep.transformed_equals_input})
    improves = ex[1] < ex[0] or max(ex) <= tol
    return Outcome({"excess_coarse": ex[0], "excess_fine": ex[1], "improves": bool(improves)},
                   {"preservation": rows})


@operation("mincut_oracle", ("value_mismatches", "set_mismatches", "instances", "max_free"))
def mincut_oracle(ctx: Context, params: dict) -> Outcome:
    """Min-cut minimizer against exhaustive enumeration on random dyadic instances."""
    count = int(params.get("instances", 50))
    top = int(params.get("max_free", 20))
    bits = int(params.get("dyadic_bits", 2))
    vals = sets = 0
    largest = 0
    rows = []
    for i in range(count):
        n = int(ctx.rng.integers(top // 2 + 4, top + 16))
        space = random_connected_space(ctx.rng, n, extra=int(ctx.rng.integers(n // 2, 2 * n)), dyadic=bits)
        k = int(ctx.rng.integers(1, top + 1))
        free = np.zeros(n, dtype=bool)
        free[ctx.rng.choice(n, size=min(k, n - 1), replace=False)] = True
        frozen = ctx.rng.random(n) < 0.5
        res = minimize_in_ball(LocalMinProblem(space, free, frozen))
        got = perimeter(space, res, free)
        ref, ref_mask = brute_min_cut(space, free, frozen)
        vals += int(got != ref)
        sets += int(not np.array_equal(res.members, ref_mask))
        largest = max(largest, int(free.sum()))
        rows.append({"instance": i, "vertices": n, "free": int(free.sum()), "value": got, "oracle": ref})
    return Outcome({"value_mismatches": vals, "set_mismatches": sets, "instances": count, "max_free": largest},
                   {"mincut": rows})


def _halfplane(h: float, extent: float = 1.0):
    space = _sample(ModelSpec("euclidean_grid", N=2, extent=extent, resolution=h))
    E = space.coords[:, 1] < 0
    region = (np.abs(space.coords[:, 0]) < 0.4 * extent) & (space.coords[:, 1] < 0.4 * extent)
    return space, E, region


@operation("comparison_sharp", ("halfplane_excess_coarse", "halfplane_excess_fine", "halfplane_decreasing",
                                "sphere_excess"))
def comparison_sharp(ctx: Context, params: dict) -> Outcome:
    """``L d <= t(d)`` for the half-plane at two resolutions and for the sphere equator."""
    h1, h2 = _resolutions(ctx, params)
    tol = float(params.get("roundoff", 1e-10))
    flat = ComparisonProfile(0.0, 2.0)
    rows, ex = [], []
    for h in (h1, h2):
        space, E, region = _halfplane(h)
        rep = laplacian_comparison_report(space, E, flat, region)
        ex.append(rep.max_excess)
        rows.append({"model": "halfplane", "h": h, "max_excess": rep.max_excess, "evaluated": rep.evaluated})
    sh = float(params.get("sphere_resolution", h1))
    sphere = _sample(ModelSpec("sphere", N=2, K=1.0, resolution=sh))
    E = sphere.chart[:, 0] >= -1e-12
    dist = distance_profile(sphere, E)
    srep = laplacian_comparison_report(sphere, E, ComparisonProfile(1.0, 2.0),
                                       dist.d_to_closure <= float(params.get("sphere_reach", 1.0)), dist)
    rows.append({"model": "sphere", "h": sh, "max_excess": srep.max_excess, "evaluated": srep.evaluated})
    return Outcome({"halfplane_excess_coarse": ex[0], "halfplane_excess_fine": ex[1],
                    "halfplane_decreasing": bool(ex[1] <= max(ex[0], tol)), "sphere_excess": srep.max_excess},
                   {"comparison": rows})


@operation("boundary_representation", ("deviation_coarse", "deviation_fine", "tightening", "ratio_min",
                                       "ratio_max"))
def boundary_representation(ctx: Context, params: dict) -> Outcome:
    """Laplacian mass of ``d`` on the half-plane boundary against the perimeter share."""
    h1, h2 = _resolutions(ctx, params)
    tol = float(params.get("roundoff", 1e-10))
    rows, dev, lo, hi = [], [], [], []
    for h in (h1, h2):
        space, E, region = _halfplane(h)
        rep = boundary_representation_report(space, E, region=region)
        d = max(abs(rep.min_ratio - 1), abs(rep.max_ratio - 1))
        dev.append(d)
        lo.append(rep.min_ratio)
        hi.append(rep.max_ratio)
        rows.append({"h": h, "min_ratio": rep.min_ratio, "max_ratio": rep.max_ratio,
                     "interior_mass": rep.interior_mass})
    return Outcome({"deviation_coarse": dev[0], "deviation_fine": dev[1],
                    "tightening": bool(dev[1] <= max(dev[0], tol)), "ratio_min": min(lo), "ratio_max": max(hi)},
                   {"boundary_representation": rows})


@operation("equidistant", ("halfplane_excess", "horoball_bound_ratio", "horoball_near_equality",
                           "geodesic_bound_ratio", "geodesic_near_equality"))
def equidistant(ctx: Context, params: dict) -> Outcome:
    """Perimeter of ``E^h`` against ``factor(h) Per(E)`` for flat and hyperbolic samples.

    ``*_bound_ratio`` is ``Per(E^h) / (factor Per(E))`` (the bound holds at
    1) and ``*_near_equality`` is the same quantity read as a lower bound.
    The horoball uses horocyclic coordinates; the geodesic half-plane uses
    Fermi coordinates around a geodesic.
    """
    h = float(params.get("h", 0.3))
    flat_h = float(params.get("flat_resolution", 0.05))
    res = float(params.get("hyperbolic_resolution", 0.05))
    half = float(params.get("window", 0.5))
    space, E, _ = _halfplane(flat_h)
    flat = equidistant_perimeter_check(space, E, h, np.abs(space.coords[:, 0]) < 0.3, ComparisonProfile(0, 2))
    rows = [{"model": "halfplane", "h": h, "ratio": flat.ratio, "factor": flat.factor, "excess": flat.excess}]
    out = {"halfplane_excess": abs(flat.excess)}
    for chart, key in (("horocyclic", "horoball"), ("fermi", "geodesic")):
        hyp = _sample(ModelSpec("hyperbolic_disc", N=2, K=-1.0, resolution=res, extent=1.0, chart=chart))
        Eh = hyp.chart[:, 0] < 0
        rep = equidistant_perimeter_check(hyp, Eh, h, np.abs(hyp.chart[:, 1]) < half, ComparisonProfile(-1, 2))
        q = rep.ratio / rep.factor
        out[f"{key}_bound_ratio"] = q
        out[f"{key}_near_equality"] = q
        rows.append({"model": key, "h": h, "ratio": rep.ratio, "factor": rep.factor, "excess": rep.excess})
    return Outcome(out, {"equidistant": rows})


@operation("green_distance", ("dirichlet_residual", "identity_reduction", "ratio_decades",
                              "identity_coarse", "identity_fine"))
def green_distance(ctx: Context, params: dict) -> Outcome:
    """Green function on a 3-D grid box at two resolutions."""
    h1, h2 = _resolutions(ctx, params)
    extent = float(params.get("extent", 3.0))
    dom_half = float(params.get("domain_half_width", 1.5))
    inner = float(params.get("inner_radius", 0.5))
    outer = float(params.get("outer_radius", 0.75))
    rows, ident, dirichlet, decades = [], [], 0.0, 0.0
    for h in (h1, h2):
        space = _sample(ModelSpec("euclidean_grid", N=3, extent=extent, resolution=h))
        pole = nearest_vertex(space, [0.0, 0.0, 0.0])
        dom = np.max(np.abs(space.coords), axis=1) < dom_half - 1e-9
        g = green_function(space, pole, dom)
        rep = green_distance_check(space, g, inner_radius=inner, outer_radius=outer)
        ident.append(rep.relative_identity_residual)
        dirichlet = max(dirichlet, rep.dirichlet_residual)
        decades = max(decades, math.log10(rep.two_sided[1] / rep.two_sided[0]))
        rows.append({"h": h, "vertices": space.vertex_count, "dirichlet_residual": rep.dirichlet_residual,
                     "identity_residual": rep.relative_identity_residual, "ratio_min": rep.two_sided[0],
                     "ratio_max": rep.two_sided[1]})
    return Outcome({"dirichlet_residual": dirichlet, "identity_reduction": 1.0 - ident[1] / ident[0],
                    "ratio_decades": decades, "identity_coarse": ident[0], "identity_fine": ident[1]},
                   {"green": rows})


@lru_cache(maxsize=8)
def _cone_scores(spec: ModelSpec, scales: tuple, interior: float, full: bool):
    """Flatness scores on the boundary of ``{t < 0}`` in a cone product.

    With ``full=False`` only the tip vertex and the interior boundary
    vertices (cone radius at least ``interior``) are scored.
    """
    space = _sample(spec)
    E = space.chart[:, 0] < -1e-9
    cand = np.flatnonzero(make_set(space, E).inner_boundary)
    tip = nearest_vertex(space, [-spec.resolution, 0.0, 0.0])
    inner = [int(x) for x in cand if space.chart[x, 1] >= interior]
    todo = cand.tolist() if full else [tip] + inner
    scores = {int(x): point_score(space, E, int(x), scales) for x in todo}
    return space, E, scores, tip, inner


@operation("singular_detection", ("tip_flagged", "interior_flagged", "tip_score_min", "interior_score_max"))
def singular_detection(ctx: Context, params: dict) -> Outcome:
    """Scan a cone-product sample: the tip must be flagged, interior boundary points must not."""
    base = _model(ctx, params)
    scales = tuple(float(r) for r in params.get("scales", (0.8, 0.4, 0.2)))
    d_tip = float(params.get("delta_tip", 0.1))
    d_int = float(params.get("delta_interior", 0.2))
    interior = float(params.get("interior_radius", 0.4))
    flagged_tip = True
    bad, tip_min, int_max = 0, math.inf, 0.0
    rows = []
    for h in _resolutions(ctx, params):
        space, E, scores, tip, inner = _cone_scores(base.replace(resolution=h), scales, interior, False)
        scan_tip = classify_points(space, E, d_tip, scales, scores=scores)
        scan_int = classify_points(space, E, d_int, scales, scores=scores)
        hit = tip in scan_tip.flagged
        wrong = sum(1 for x in inner if x in scan_int.flagged)
        flagged_tip &= hit
        bad += wrong
        tip_min = min(tip_min, scores[tip])
        top = max((scores[x] for x in inner), default=0.0)
        int_max = max(int_max, top)
        rows.append({"h": h, "vertices": space.vertex_count, "tip_score": scores[tip], "tip_flagged": hit,
                     "interior": len(inner), "interior_flagged": wrong, "interior_score_max": top})
    return Outcome({"tip_flagged": bool(flagged_tip), "interior_flagged": bad, "tip_score_min": tip_min,
                    "interior_score_max": int_max}, {"singular": rows})


@operation("tube_slope", ("slope", "flagged"))
def tube_slope(ctx: Context, params: dict) -> Outcome:
    """Log-log slope of the tube mass around the flagged set of a cone-product scan."""
    spec = _model(ctx, params)
    scales = tuple(float(r) for r in params.get("scales", (0.8, 0.4, 0.2)))
    delta = float(params.get("delta", 0.1))
    gamma = float(params.get("gamma", 0.5))
    ladder = tuple(float(r) for r in params.get("tube_scales", scales))
    space, E, scores, _, _ = _cone_scores(spec, scales, float(params.get("interior_radius", 0.4)), True)
    scan = classify_points(space, E, delta, scales, scores=scores)
    est = tube_estimate_experiment(space, scan, gamma, ladder)
    rows = [{"r": r, "mass": m} for r, m in zip(est.scales, est.masses)]
    slope = est.slope if est.slope is not None else math.nan
    return Outcome({"slope": slope, "flagged": len(scan.flagged)}, {"tube": rows})


@operation("comparison_function", ("ode_residual", "branch_error"))
def comparison_function(ctx: Context, params: dict) -> Outcome:
    """The comparison function against its ODE and three closed-form evaluations."""
    cases = [(1.0, 2.0), (1.0, 3.0), (0.0, 2.0), (-1.0, 2.0), (-2.0, 4.0)]
    res = 0.0
    rows = []
    for K, N in cases:
        prof = ComparisonProfile(K, N)
        lo, hi = prof.domain
        top = min(0.8 * hi, 2.0)
        xs = np.linspace(-top, top, 17)
        r_ode = float(np.max(np.abs(prof.ode_residual(xs))))
        r_int = max(abs(comparison_by_ode(K, N, float(x)) - t_KN(K, N, float(x))) for x in xs)
        res = max(res, r_ode, r_int)
        rows.append({"K": K, "N": N, "ode_residual": r_ode, "integrated_difference": r_int})
    branch = [(0.0, 5.0, 0.7, 0.0), (-1.0, 2.0, 1.0, 0.7615941559557649), (1.0, 2.0, math.pi / 4, -1.0)]
    err = max(abs(t_KN(K, N, x) - v) for K, N, x, v in branch)
    return Outcome({"ode_residual": res, "branch_error": err}, {"comparison_function": rows})


@operation("halfplane_table", ("max_excess",))
def halfplane_table(ctx: Context, params: dict) -> Outcome:
    """Comparison excess of the flat half-plane at every resolution of the scenario."""
    rows = []
    for h in params.get("resolutions", ctx.resolutions):
        space, E, region = _halfplane(float(h))
        dist = distance_profile(space, E)
        rep = laplacian_comparison_report(space, E, ComparisonProfile(0.0, 2.0), region, dist)
        br = boundary_representation_report(space, E, region=region, dist=dist)
        rows.append({"h": float(h), "vertices": space.vertex_count, "max_excess": rep.max_excess,
                     "boundary_ratio_min": br.min_ratio, "boundary_ratio_max": br.max_ratio})
    return Outcome({"max_excess": max(r["max_excess"] for r in rows)}, {"excess": rows})
