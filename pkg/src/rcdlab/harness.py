"""Scenario files, their validation and execution into deterministic reports.

A scenario is a TOML file::

    name = "example"
    seed = 7
    resolutions = [0.1, 0.05]

    [model]
    kind = "euclidean_grid"
    resolution = 0.1

    [[steps]]
    name = "flat"
    op = "comparison_sharp"
    params = { sphere_resolution = 0.05 }

    [thresholds]
    "flat.sphere_excess" = { max = 0.05 }

Threshold values are a number (an upper bound) or a table with any of
``max``, ``min`` and ``equals``.  Keys name a step and one of the metrics
its operation declares.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError, RcdlabError, ScenarioError, SolverError
from .experiments import OPERATIONS, Context
from .samplers import ModelSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCENARIO_PACKAGE = "rcdlab.scenarios"
THRESHOLD_KEYS = ("max", "min", "equals")


@dataclass(frozen=True)
class Step:
    name: str
    op: str
    params: dict


@dataclass(frozen=True)
class Scenario:
    name: str
    model: ModelSpec | None
    resolutions: tuple
    steps: tuple
    thresholds: dict  # "step.metric" -> {"max": .., "min": .., "equals": ..}
    seed: int = 0
    criterion: int | None = None
    description: str = ""
    runtime_limit_s: float | None = None


@dataclass
class Report:
    data: dict
    tables: dict = field(default_factory=dict)  # "step.table" -> rows
    timings: dict = field(default_factory=dict)  # step -> seconds; never serialized

    @property
    def passed(self) -> bool:
        return bool(self.data["passed"])

    def to_json(self) -> str:
        return json.dumps(_plain(self.data), sort_keys=True, indent=2) + "\n"


def _fail(message: str, code: str = "validation_error"):
    raise ScenarioError(message, code=code)


def _threshold(key, value) -> dict:
    if isinstance(value, bool) or not isinstance(value, (int, float, dict)):
        _fail(f"threshold {key!r} must be a number or a table")
    if not isinstance(value, dict):
        return {"max": float(value)}
    unknown = set(value) - set(THRESHOLD_KEYS)
    if unknown or not value:
        _fail(f"threshold {key!r} has unknown or missing bounds {sorted(unknown)}")
    return dict(value)


def scenario_from_dict(data: dict) -> Scenario:
    """Validate a parsed scenario; every problem is reported before anything is computed."""
    if not isinstance(data, dict):
        _fail("scenario must be a table", "malformed_scenario")
    allowed = {"name", "seed", "resolutions", "model", "steps", "thresholds", "criterion", "description",
               "runtime_limit_s"}
    extra = set(data) - allowed
    if extra:
        _fail(f"unknown top-level keys {sorted(extra)}")
    name = data.get("name")
    if not isinstance(name, str) or not name:
        _fail("scenario needs a nonempty name")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        _fail("seed must be an unsigned 64-bit integer")
    res = data.get("resolutions", [])
    if not isinstance(res, list) or not all(isinstance(r, (int, float)) and r > 0 for r in res):
        _fail("resolutions must be a list of positive numbers")
    if any(b >= a for a, b in zip(res, res[1:])):
        _fail("resolutions must be strictly decreasing")
    model = None
    if "model" in data:
        try:
            model = ModelSpec(**data["model"])
        except (TypeError, InvalidParameterError) as exc:
            _fail(f"bad model: {exc}")
    steps = []
    names = set()
    raw_steps = data.get("steps", [])
    if not isinstance(raw_steps, list):
        _fail("steps must be an array of tables")
    for i, st in enumerate(raw_steps):
        if not isinstance(st, dict) or "op" not in st:
            _fail(f"step {i} needs an 'op'")
        if set(st) - {"name", "op", "params"}:
            _fail(f"step {i} has unknown keys {sorted(set(st) - {'name', 'op', 'params'})}")
        op = st["op"]
        if op not in OPERATIONS:
            _fail(f"unknown operation {op!r}", "unknown_operation")
        sname = st.get("name", op)
        if sname in names:
            _fail(f"duplicate step name {sname!r}")
        names.add(sname)
        params = st.get("params", {})
        if not isinstance(params, dict):
            _fail(f"params of step {sname!r} must be a table")
        steps.append(Step(sname, op, params))
    by_name = {s.name: s for s in steps}
    thresholds = {}
    raw_th = data.get("thresholds", {})
    if not isinstance(raw_th, dict):
        _fail("thresholds must be a table")
    for key, value in raw_th.items():
        sname, _, metric = key.rpartition(".")
        if sname not in by_name:
            _fail(f"threshold {key!r} names no step")
        if metric not in OPERATIONS[by_name[sname].op].metrics:
            _fail(f"threshold {key!r}: operation {by_name[sname].op!r} has no metric {metric!r}")
        thresholds[key] = _threshold(key, value)
    limit = data.get("runtime_limit_s")
    if limit is not None and not (isinstance(limit, (int, float)) and limit > 0):
        _fail("runtime_limit_s must be positive")
    crit = data.get("criterion")
    if crit is not None and (isinstance(crit, bool) or not isinstance(crit, int)):
        _fail("criterion must be an integer")
    return Scenario(name, model, tuple(float(r) for r in res), tuple(steps), thresholds, int(seed), crit,
                    str(data.get("description", "")), None if limit is None else float(limit))


def parse_scenario(text: str) -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"malformed scenario file: {exc}", code="malformed_scenario") from exc
    return scenario_from_dict(data)


def load_scenario(path) -> Scenario:
    """Load a scenario from a path, or by name from the bundled scenarios."""
    p = Path(path)
    if p.exists():
        return parse_scenario(p.read_text())
    name = p.name if p.suffix == ".toml" else p.name + ".toml"
    bundled = resources.files(SCENARIO_PACKAGE) / name
    if bundled.is_file():
        return parse_scenario(bundled.read_text())
    raise ScenarioError(f"no scenario file {path!r}", code="malformed_scenario")


def bundled_scenarios() -> list:
    files = sorted(f.name for f in resources.files(SCENARIO_PACKAGE).iterdir() if f.name.endswith(".toml"))
    return [load_scenario(name) for name in files]


def _plain(x):
    """JSON-ready copy; non-finite floats become strings so output stays standard JSON."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def check(value, bound: dict) -> bool:
    if value is None:
        return False
    if "equals" in bound:
        if value != bound["equals"]:
            return False
    if isinstance(value, bool) and ("max" in bound or "min" in bound):
        return False
    if isinstance(value, float) and math.isnan(value):
        return False
    if "max" in bound and not value <= bound["max"]:
        return False
    if "min" in bound and not value >= bound["min"]:
        return False
    return True


def _spec_hash(spec: ModelSpec | None) -> str | None:
    if spec is None:
        return None
    blob = json.dumps(spec.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def run_scenario(s: Scenario, seed: int | None = None) -> Report:
    """Run the steps in order and evaluate the thresholds.

    A library error inside a step is recorded with its code and the next
    step runs; solver failures and unexpected exceptions stop the run and
    mark the remaining steps as skipped.
    """
    seed = s.seed if seed is None else int(seed)
    children = np.random.SeedSequence(seed).spawn(len(s.steps))
    results, tables, timings = [], {}, {}
    metrics = {}
    halted = False
    for step, child in zip(s.steps, children):
        if halted:
            results.append({"name": step.name, "op": step.op, "status": "skipped"})
            continue
        ctx = Context(s.model, s.resolutions, np.random.default_rng(child))
        start = time.perf_counter()
        try:
            out = OPERATIONS[step.op].func(ctx, dict(step.params))
        except RcdlabError as exc:
            results.append({"name": step.name, "op": step.op, "status": "error",
                            "error": {"code": exc.code, "message": str(exc)}})
            halted = isinstance(exc, SolverError)
            continue
        except Exception as exc:  # noqa: BLE001 - reported, then the run stops
            results.append({"name": step.name, "op": step.op, "status": "error",
                            "error": {"code": "internal_error", "message": f"{type(exc).__name__}: {exc}"}})
            halted = True
            continue
        finally:
            timings[step.name] = time.perf_counter() - start
        results.append({"name": step.name, "op": step.op, "status": "ok", "metrics": out.metrics})
        for key, val in out.metrics.items():
            metrics[f"{step.name}.{key}"] = val
        for tname, rows in out.tables.items():
            tables[f"{step.name}.{tname}"] = rows
    checks = []
    for key in sorted(s.thresholds):
        val = metrics.get(key)
        checks.append({"key": key, "measured": val, "threshold": s.thresholds[key],
                       "passed": check(val, s.thresholds[key])})
    ok = all(c["passed"] for c in checks) and all(r["status"] == "ok" for r in results)
    data = {
        "scenario": s.name,
        "criterion": s.criterion,
        "passed": ok,
        "steps": results,
        "checks": checks,
        "provenance": {
            "seed": seed,
            "model": None if s.model is None else s.model.to_dict(),
            "model_hash": _spec_hash(s.model),
            "resolutions": list(s.resolutions),
            "solver_modes": {"heat": "exact-eigen up to 2000 vertices, implicit Euler beyond",
                             "min_cut": "integer max-flow, smallest source side",
                             "distances": "lexicographic multi-source Dijkstra"},
        },
    }
    return Report(_plain(data), tables, timings)


def tables_to_csv(rows: list) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    for r in rows[1:]:
        cols += [c for c in r if c not in cols]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _plain(v) for k, v in r.items()})
    return buf.getvalue()


def write_report(report: Report, out) -> list:
    """Write the JSON report and one CSV per table next to it; returns the paths written."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_json())
    paths = [out]
    for key, rows in sorted(report.tables.items()):
        p = out.with_name(f"{out.stem}.{key.replace('.', '_')}.csv")
        p.write_text(tables_to_csv(rows))
        paths.append(p)
    return paths


def summary_line(report: Report, elapsed: float | None = None, limit: float | None = None) -> str:
    d = report.data
    label = f"criterion {d['criterion']:>2}" if d.get("criterion") is not None else d["scenario"]
    parts = []
    for c in d["checks"]:
        m = c["measured"]
        parts.append(f"{c['key']}={m:.3g}" if isinstance(m, float) else f"{c['key']}={m}")
    status = "PASS" if report.passed and (limit is None or elapsed is None or elapsed <= limit) else "FAIL"
    tail = "" if elapsed is None else f" [{elapsed:.1f}s" + (f" / {limit:g}s]" if limit else "]")
    return f"{status} {label} ({d['scenario']}): " + ", ".join(parts) + tail
