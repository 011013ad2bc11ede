import json
import re

import pytest

from rcdlab.errors import ScenarioError
from rcdlab.harness import (
    bundled_scenarios,
    check,
    load_scenario,
    parse_scenario,
    run_scenario,
    scenario_from_dict,
    summary_line,
    write_report,
)

CHEAP = """
name = "cheap"
seed = 3

[[steps]]
name = "heat"
op = "heat_exactness"
params = { graphs = 3, max_vertices = 12, times = [0.1, 1.0] }

[thresholds]
"heat.mass_residual" = 1e-10
"heat.graphs" = { equals = 3 }
"""


def code_of(text):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    return info.value.code


def test_empty_steps_pass():
    rep = run_scenario(scenario_from_dict({"name": "empty"}))
    assert rep.passed
    assert rep.data["steps"] == [] and rep.data["checks"] == []


def test_bad_threshold_rejected_before_compute():
    assert code_of(CHEAP + '"heat.no_such_metric" = 1.0\n') == "validation_error"
    assert code_of(CHEAP + '"missing.graphs" = 1.0\n') == "validation_error"
    assert code_of(CHEAP.replace("= { equals = 3 }", "= { around = 3 }")) == "validation_error"


def test_unknown_operation():
    assert code_of('name = "x"\n[[steps]]\nop = "nope"\n') == "unknown_operation"


def test_malformed_toml():
    assert code_of('name = "x"\n[[steps]\n') == "malformed_scenario"
    with pytest.raises(ScenarioError) as info:
        load_scenario("/nonexistent/scenario.toml")
    assert info.value.code == "malformed_scenario"


@pytest.mark.parametrize("extra", [
    "resolutions = [0.1, 0.1]",
    "resolutions = [0.05, 0.1]",
    "resolutions = [0.1, -0.05]",
    "seed = -1",
    "runtime_limit_s = 0",
    "criterion = true",
    "colour = 1",
])
def test_top_level_validation(extra):
    assert code_of(f'name = "x"\n{extra}\n') == "validation_error"


def test_duplicate_step_names():
    text = 'name = "x"\n[[steps]]\nop = "comparison_function"\n[[steps]]\nop = "comparison_function"\n'
    assert code_of(text) == "validation_error"


def test_same_seed_gives_identical_json():
    s = parse_scenario(CHEAP)
    a, b = run_scenario(s), run_scenario(s)
    assert a.to_json() == b.to_json()
    assert a.passed
    assert run_scenario(s, seed=4).to_json() != a.to_json()
    assert "timings" not in a.to_json()


def test_check_semantics():
    assert check(1.0, {"max": 1.0}) and not check(1.1, {"max": 1.0})
    assert check(2.0, {"min": 2.0}) and not check(1.9, {"min": 2.0})
    assert check(True, {"equals": True}) and not check(False, {"equals": True})
    assert not check(None, {"max": 1.0})
    assert not check(float("nan"), {"max": 1.0})
    assert not check(True, {"max": 2.0})


def test_library_error_is_recorded_and_run_continues():
    text = """
name = "err"
[[steps]]
name = "bad"
op = "heat_exactness"
params = { graphs = 0, max_vertices = 12, models = [{ kind = "euclidean_grid", N = 2, extent = 1.0, resolution = 0.1 }] }
[[steps]]
name = "ok"
op = "comparison_function"
"""
    rep = run_scenario(parse_scenario(text))
    bad, ok = rep.data["steps"]
    assert bad["status"] == "error" and bad["error"]["code"] == "invalid_parameter"
    assert ok["status"] == "ok"
    assert not rep.passed


def test_write_report_and_csv(tmp_path):
    rep = run_scenario(parse_scenario(CHEAP))
    paths = write_report(rep, tmp_path / "out" / "cheap.json")
    assert paths[0].name == "cheap.json"
    assert json.loads(paths[0].read_text())["passed"] is True
    (csv_path,) = paths[1:]
    assert csv_path.name == "cheap.heat_heat_exactness.csv"
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("vertices,edges")
    assert len(lines) == 4


def test_halfplane_report_has_excess_table():
    rep = run_scenario(load_scenario("halfplane_k0"))
    (rows,) = rep.tables.values()
    assert [r["h"] for r in rows] == [0.1, 0.05, 0.025]
    assert all("max_excess" in r for r in rows)
    assert rep.passed


def test_every_criterion_has_one_scenario():
    crits = [s.criterion for s in bundled_scenarios() if s.criterion is not None]
    assert sorted(crits) == list(range(1, 14))
    limited = {s.criterion for s in bundled_scenarios() if s.runtime_limit_s is not None}
    assert limited == {1, 2, 3, 4, 5, 6, 7, 9}


def test_summary_line_format():
    rep = run_scenario(parse_scenario(CHEAP))
    line = summary_line(rep, 0.25, 10)
    assert re.fullmatch(r"PASS cheap \(cheap\): heat\.graphs=3, heat\.mass_residual=\S+ \[0\.2s / 10s\]", line)
    assert summary_line(rep, 11.0, 10).startswith("FAIL")
