"""One test per acceptance criterion; each prints a PASS/FAIL summary line."""

import time

import pytest

from rcdlab.harness import bundled_scenarios, run_scenario, summary_line

SCENARIOS = {s.criterion: s for s in bundled_scenarios() if s.criterion is not None}

# a horoball is not a perimeter minimizer, so its equidistant sets grow like e^h rather than cosh h
HOROBALL = ("horoball perimeter ratio tracks e^h, exceeding the cosh^(N-1) bound by far more than 5%; "
            "the bound needs a minimizing boundary")


def params():
    out = []
    for c in sorted(SCENARIOS):
        marks = [pytest.mark.xfail(strict=True, reason=HOROBALL)] if c == 9 else []
        out.append(pytest.param(c, id=f"criterion_{c:02d}_{SCENARIOS[c].name}", marks=marks))
    return out


@pytest.mark.acceptance
@pytest.mark.parametrize("criterion", params())
def test_criterion(criterion, capsys):
    s = SCENARIOS[criterion]
    start = time.perf_counter()
    rep = run_scenario(s)
    elapsed = time.perf_counter() - start
    line = summary_line(rep, elapsed, s.runtime_limit_s)
    with capsys.disabled():
        print("\n" + line)
    failed = [c["key"] for c in rep.data["checks"] if not c["passed"]]
    errors = [st["name"] for st in rep.data["steps"] if st["status"] != "ok"]
    assert rep.passed, f"failed checks {failed}, step errors {errors}"
    if s.runtime_limit_s is not None:
        assert elapsed <= s.runtime_limit_s
