"""Command-line front end: ``rcdlab <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .comparison import (
    ComparisonProfile,
    boundary_representation_report,
    distance_profile,
    laplacian_comparison_report,
)
from .errors import InvalidParameterError, RcdlabError
from .green import green_ball_domain, green_distance_check, green_function
from .harness import _plain, bundled_scenarios, load_scenario, run_scenario, summary_line, write_report
from .heat import HeatOperator
from .hopf_lax import hopf_lax
from .laplacian_bounds import SENSES, check_upper_bound
from .perimeter import LocalMinProblem, make_set, minimize_in_ball
from .regularity import classify_points
from .samplers import KINDS, ModelSpec, sample_model
from .space import ball, load_space, save_space


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidParameterError(f"cannot read {path}: {exc}") from exc


def _write_json(data, path):
    text = json.dumps(_plain(data), sort_keys=True, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _field(space, path):
    f = np.asarray(_read_json(path), dtype=float)
    if f.shape != (space.vertex_count,):
        raise InvalidParameterError(f"field in {path} needs {space.vertex_count} values")
    return f


def _scalar_or_field(space, value):
    try:
        return float(value)
    except ValueError:
        return _field(space, value)


def _members(space, path):
    data = _read_json(path)
    ids = data["members"] if isinstance(data, dict) else data
    mask = np.zeros(space.vertex_count, dtype=bool)
    mask[np.asarray(ids, dtype=np.int64)] = True
    return mask


def _ball_arg(text):
    try:
        c, r = text.split(":")
        return int(c), float(r)
    except ValueError as exc:
        raise InvalidParameterError(f"expected center:radius, got {text!r}") from exc


def _region(space, text):
    if text in (None, "all"):
        return None
    if text.startswith("ball:"):
        c, r = _ball_arg(text[5:])
        return ball(space, c, r).mask(space.vertex_count)
    raise InvalidParameterError(f"region must be 'all' or 'ball:i:r', got {text!r}")


def cmd_generate(a):
    spec = ModelSpec(a.kind, N=a.N, K=a.K, cone_radius=a.cone_radius, resolution=a.h, extent=a.extent,
                     periodic=a.periodic, chart=a.chart)
    space = sample_model(spec)
    save_space(space, a.out)
    print(f"{space.vertex_count} vertices, {space.edge_count} edges -> {a.out}", file=sys.stderr)


def cmd_heat(a):
    space = load_space(a.space)
    op = HeatOperator(space, method=a.method)
    _write_json({"t": a.t, "method": op.method, "values": op.apply(_field(space, a.field), a.t).tolist()}, a.out)


def cmd_green(a):
    space = load_space(a.space)
    g = green_function(space, a.pole, green_ball_domain(space, a.pole, a.radius), a.N)
    rep = green_distance_check(space, g)
    _write_json({"pole": g.pole, "N": g.N, "domain": np.flatnonzero(g.domain).tolist(),
                 "values": g.values.tolist(), "green_distance": g.green_distance.tolist(),
                 "two_sided": list(rep.two_sided), "laplacian_identity_residual": rep.laplacian_identity_residual,
                 "dirichlet_residual": rep.dirichlet_residual}, a.out)


def cmd_lapbound(a):
    space = load_space(a.space)
    f = _field(space, a.field)
    eta = _scalar_or_field(space, a.eta)
    region = _region(space, a.region)
    senses = SENSES if a.sense == "all" else (a.sense,)
    out = {}
    for sense in senses:
        c = check_upper_bound(space, f, eta, region, sense)
        out[sense] = {"passed": c.passed, "max_violation": c.max_violation, "witness": c.witness,
                      "tolerance": c.tolerance, "signed_excess": c.signed_excess}
    _write_json(out, a.out)
    return 0 if all(v["passed"] for v in out.values()) else 1


def cmd_hopflax(a):
    space = load_space(a.space)
    res = hopf_lax(space, _field(space, a.field), a.p, a.t)
    _write_json({"p": res.p, "t": res.t, "values": res.values.tolist(), "argmin": res.argmin.tolist()}, a.out)


def cmd_mincut(a):
    space = load_space(a.space)
    c, r = _ball_arg(a.ball)
    res = minimize_in_ball(LocalMinProblem.in_ball(space, c, r, _members(space, a.frozen)))
    _write_json({"members": res.member_ids.tolist(), "perimeter": res.perimeter_total}, a.out)


def cmd_compare(a):
    space = load_space(a.space)
    E = make_set(space, _members(space, a.set))
    prof = ComparisonProfile(a.K, a.N)
    region = _region(space, a.region)
    dist = distance_profile(space, E)
    rep = laplacian_comparison_report(space, E, prof, region, dist)
    br = boundary_representation_report(space, E, prof, region, dist)
    _write_json({"max_excess": rep.max_excess, "witness": rep.witness, "reach_excess": rep.reach_excess,
                 "evaluated": rep.evaluated, "outside_domain": rep.outside_domain,
                 "boundary_ratio": [br.min_ratio, br.max_ratio]}, a.report)


def cmd_scan(a):
    space = load_space(a.space)
    scales = [float(s) for s in a.scales.split(",")]
    res = classify_points(space, _members(space, a.set), a.delta, scales)
    _write_json({"delta": res.delta, "scales": list(res.r_grid), "flagged": sorted(res.flagged),
                 "scores": {str(k): v for k, v in sorted(res.scores.items())},
                 "tube_masses": {str(k): v for k, v in res.tube_masses.items()}}, a.out)


def cmd_run(a):
    s = load_scenario(a.scenario)
    start = time.perf_counter()
    rep = run_scenario(s, a.seed)
    if a.out:
        write_report(rep, a.out)
    else:
        sys.stdout.write(rep.to_json())
    print(summary_line(rep, time.perf_counter() - start, s.runtime_limit_s), file=sys.stderr)
    return 0 if rep.passed else 1


def cmd_accept(a):
    ok = True
    for s in bundled_scenarios():
        if s.criterion is None:
            continue
        start = time.perf_counter()
        rep = run_scenario(s)
        elapsed = time.perf_counter() - start
        if a.out_dir:
            write_report(rep, Path(a.out_dir) / f"{s.name}.json")
        line = summary_line(rep, elapsed, s.runtime_limit_s)
        ok &= line.startswith("PASS")
        print(line, flush=True)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rcdlab", description="Discrete laboratory for sharp Laplacian and "
                                "perimeter comparison on sampled metric measure spaces.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a model space to a JSON file")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--h", type=float, default=0.1, help="mesh size")
    g.add_argument("--N", type=int, default=2)
    g.add_argument("--K", type=float, default=0.0)
    g.add_argument("--cone-radius", type=float, default=1.0)
    g.add_argument("--extent", type=float, default=1.0)
    g.add_argument("--periodic", action="store_true")
    g.add_argument("--chart", choices=("fermi", "horocyclic"))
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    h = sub.add_parser("heat", help="apply the heat semigroup to a field")
    h.add_argument("--space", required=True)
    h.add_argument("--field", required=True)
    h.add_argument("--t", type=float, required=True)
    h.add_argument("--method", choices=("auto", "exact", "implicit"), default="auto")
    h.add_argument("--out")
    h.set_defaults(func=cmd_heat)

    gr = sub.add_parser("green", help="Dirichlet Green function on a ball")
    gr.add_argument("--space", required=True)
    gr.add_argument("--pole", type=int, required=True)
    gr.add_argument("--radius", type=float, required=True)
    gr.add_argument("--N", type=float)
    gr.add_argument("--out")
    gr.set_defaults(func=cmd_green)

    lb = sub.add_parser("lapbound", help="check an upper Laplacian bound")
    lb.add_argument("--space", required=True)
    lb.add_argument("--field", required=True)
    lb.add_argument("--eta", required=True, help="number or JSON field file")
    lb.add_argument("--sense", choices=SENSES + ("all",), default="all")
    lb.add_argument("--region", default="all", help="'all' or ball:i:r")
    lb.add_argument("--out")
    lb.set_defaults(func=cmd_lapbound)

    hl = sub.add_parser("hopflax", help="p-Hopf-Lax transform")
    hl.add_argument("--space", required=True)
    hl.add_argument("--field", required=True)
    hl.add_argument("--p", type=float, default=1.0)
    hl.add_argument("--t", type=float, default=1.0)
    hl.add_argument("--out")
    hl.set_defaults(func=cmd_hopflax)

    mc = sub.add_parser("mincut", help="perimeter minimizer in a ball with frozen exterior")
    mc.add_argument("--space", required=True)
    mc.add_argument("--ball", required=True, help="center:radius")
    mc.add_argument("--frozen", required=True, help="set file with the exterior membership")
    mc.add_argument("--out")
    mc.set_defaults(func=cmd_mincut)

    cp = sub.add_parser("compare", help="Laplacian comparison for the distance from a set")
    cp.add_argument("--space", required=True)
    cp.add_argument("--set", required=True)
    cp.add_argument("--K", type=float, default=0.0)
    cp.add_argument("--N", type=float, default=2.0)
    cp.add_argument("--region", default="all")
    cp.add_argument("--report")
    cp.set_defaults(func=cmd_compare)

    sc = sub.add_parser("scan", help="flag boundary points without a flat scale")
    sc.add_argument("--space", required=True)
    sc.add_argument("--set", required=True)
    sc.add_argument("--delta", type=float, default=0.1)
    sc.add_argument("--scales", default="0.8,0.4,0.2")
    sc.add_argument("--out")
    sc.set_defaults(func=cmd_scan)

    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("--scenario", required=True, help="path or bundled scenario name")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    ac = sub.add_parser("accept", help="run every bundled acceptance scenario")
    ac.add_argument("--out-dir")
    ac.set_defaults(func=cmd_accept)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except RcdlabError as exc:
        print(json.dumps({"error": {"code": exc.code, "message": str(exc)}}), file=sys.stderr)
        return 2
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
