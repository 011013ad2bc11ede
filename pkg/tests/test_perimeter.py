import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import path_space, random_spaces, unit_grid
from rcdlab.errors import InvalidParameterError
from rcdlab.oracles import brute_min_cut
from rcdlab.perimeter import (
    LocalMinProblem,
    coarea_check,
    cut_and_paste_checks,
    cut_edge_ids,
    make_set,
    minimize_in_ball,
    perimeter,
    perimeter_shares,
    quasi_min_density_report,
    tube_volume,
)
from rcdlab.samplers import ModelSpec, nearest_vertex, sample_model
from rcdlab.space import ball, diameter


def test_center_of_unit_grid():
    s = unit_grid(3)
    assert perimeter(s, [4]) == 4.0
    assert perimeter(s, []) == 0.0
    assert perimeter(s, np.arange(9)) == 0.0


def test_path_prefix():
    assert perimeter(path_space(np.ones(4)), [0, 1]) == 1.0


def test_region_counts_edges_touching_it():
    s = unit_grid(3)
    # cut edges of {4} are 1-4, 3-4, 4-5, 4-7; region {0, 1} touches only 1-4
    assert len(cut_edge_ids(s, [4], [0, 1])) == 1
    assert perimeter(s, [4], [0, 1]) == 1.0
    assert perimeter(s, [4], [4]) == 4.0


def test_set_bookkeeping():
    s = unit_grid(3)
    E = make_set(s, [0, 1, 3])
    assert E.perimeter_total == 4.0
    assert set(np.flatnonzero(E.inner_boundary)) == {1, 3}
    assert set(np.flatnonzero(E.outer_boundary)) == {2, 4, 6}
    assert perimeter_shares(s, E, "outer").sum() == E.perimeter_total
    assert perimeter_shares(s, E, "inner").sum() == E.perimeter_total


def test_path_min_cut_picks_light_edge():
    s = path_space(np.ones(4), weights=[1.0, 0.5, 2.0, 1.0])
    frozen = np.array([True, False, False, False, False])
    free = np.array([False, True, True, True, False])
    res = minimize_in_ball(LocalMinProblem(s, free, frozen))
    assert res.perimeter_total == 0.5
    assert list(res.member_ids) == [0, 1]
    assert brute_min_cut(s, free, frozen)[0] == 0.5


def test_grid_dirichlet_gives_vertical_cut():
    s = unit_grid(4)
    col = lambda j: [i * 4 + j for i in range(4)]  # noqa: E731
    frozen = np.zeros(16, dtype=bool)
    frozen[col(0)] = True
    free = np.zeros(16, dtype=bool)
    free[col(1) + col(2)] = True
    res = minimize_in_ball(LocalMinProblem(s, free, frozen))
    value, smallest = brute_min_cut(s, free, frozen)
    assert res.perimeter_total == value == 4.0
    # three vertical cuts tie; the smallest set is the frozen column alone
    assert np.array_equal(res.members, smallest)
    assert list(res.member_ids) == col(0)


def test_all_frozen_inside_fills_ball():
    s = unit_grid(5)
    b = ball(s, 12, 1.5)
    frozen = np.ones(25, dtype=bool)
    res = minimize_in_ball(LocalMinProblem.in_ball(s, 12, 1.5, frozen))
    assert res.members.all()
    assert perimeter(s, res, b.mask(25)) == 0.0


@settings(max_examples=30)
@given(random_spaces(max_n=16, dyadic=2), st.integers(0, 2**16))
def test_min_cut_matches_brute_force(s, seed):
    rng = np.random.default_rng(seed)
    n = s.vertex_count
    free = rng.random(n) < 0.7
    frozen = rng.random(n) < 0.5
    prob = LocalMinProblem(s, free, frozen)
    res = minimize_in_ball(prob)
    _, smallest = brute_min_cut(s, free, frozen)
    # the window may add cut edges between frozen vertices; they are common to both
    assert prob.objective(res.members) == prob.objective(smallest)
    assert np.array_equal(res.members, smallest)
    assert np.array_equal(res.members[~free], frozen[~free])


def test_min_cut_beats_random_perturbations():
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=1.0, resolution=0.1))
    rng = np.random.default_rng(5)
    c = nearest_vertex(s, [0.0, 0.0])
    frozen = s.coords[:, 0] + 0.3 * np.sin(6 * s.coords[:, 1]) < 0
    prob = LocalMinProblem.in_ball(s, c, 0.35, frozen)
    best = prob.objective(minimize_in_ball(prob).members)
    for _ in range(500):
        trial = frozen.copy()
        flip = prob.free & (rng.random(s.vertex_count) < 0.3)
        trial[flip] = rng.random(int(flip.sum())) < 0.5
        assert best <= prob.objective(trial)


def test_halfspace_is_calibrated_on_product():
    s = sample_model(ModelSpec("product_line", N=2, extent=1.0, resolution=0.125))
    t = s.chart[:, 0]
    E = t < 0
    for c in np.flatnonzero(np.abs(t) < 0.3)[::3]:
        res = minimize_in_ball(LocalMinProblem.in_ball(s, int(c), 0.5, E))
        assert np.array_equal(res.members, E)


def test_density_at_halfplane_boundary():
    h = 0.05
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=1.0, resolution=h))
    E = s.coords[:, 0] < -1e-9
    x = nearest_vertex(s, [0.0, 0.0])
    (row,) = quasi_min_density_report(s, E, [(x, 3 * h)])
    # the open graph ball of radius 3h is the l1 diamond of 13 vertices; 4 lie left of the center column
    assert row.inside_fraction == pytest.approx(4 / 13, rel=1e-12)
    assert row.outside_fraction == pytest.approx(9 / 13, rel=1e-12)
    # both densities stay bounded away from 0 at a boundary point
    assert min(row.inside_fraction, row.outside_fraction) > 0.25
    (single,) = quasi_min_density_report(s, [x], [(x, 3 * h)])
    assert single.perimeter_ratio > 0


def test_tube_volume():
    h = 0.05
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=1.0, resolution=h))
    column = np.abs(s.coords[:, 0]) < 1e-9
    assert tube_volume(s, column, 0.0) == pytest.approx(s.masses[column].sum())
    assert tube_volume(s, column, diameter(s)) == pytest.approx(s.total_mass)
    assert tube_volume(s, column, 2 * h) == pytest.approx((2 * 2 * h + h) * 1.0, rel=1e-12)
    assert tube_volume(s, [], 1.0) == 0.0
    with pytest.raises(InvalidParameterError):
        tube_volume(s, column, -1.0)


def test_cut_and_paste_trivial_cases():
    s = unit_grid(5)
    far = cut_and_paste_checks(s, [0], [24])
    assert far.slack == 0 and far.shared_cut_edges == 0
    nested = cut_and_paste_checks(s, [6, 7], [6, 7, 8, 12])
    assert nested.per_intersection == nested.per_E
    assert nested.per_union == nested.per_F
    assert nested.slack == 0


def test_cut_and_paste_random_subsets_of_five_by_five():
    s = unit_grid(5)
    rng = np.random.default_rng(6)
    for _ in range(200):
        E, F = rng.random((2, 25)) < 0.5
        rep = cut_and_paste_checks(s, E, F)
        assert rep.slack >= 0
        # slack is twice the face measure of shared cut edges with opposite orientation
        assert rep.slack == 2 * rep.opposite_orientation


@given(random_spaces(max_n=14), st.integers(0, 2**16))
def test_submodularity(s, seed):
    rng = np.random.default_rng(seed)
    E, F = rng.random((2, s.vertex_count)) < 0.5
    assert cut_and_paste_checks(s, E, F).slack >= 0


def test_coarea_examples():
    s = unit_grid(4)
    E = np.zeros(16, dtype=bool)
    E[[0, 1, 5]] = True
    rep = coarea_check(s, E.astype(float))
    assert rep.total_variation == rep.level_integral == perimeter(s, E)
    p = path_space([1.0, 2.0, 0.5], weights=[2.0, 1.0, 4.0])
    v = np.array([0.0, 1.0, 3.0, 3.5])
    rep = coarea_check(p, v)
    # face measures 2, 2, 2 times level gaps 1, 2, 0.5
    assert rep.total_variation == rep.level_integral == 7.0
    assert coarea_check(s, np.full(16, 2.0)).total_variation == 0.0


@given(random_spaces(max_n=14), st.integers(0, 2**16))
def test_coarea_exact(s, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=s.vertex_count)
    f = rng.uniform(0, 2, s.vertex_count)
    assert coarea_check(s, v, f, exact=True).difference == 0.0
    fast = coarea_check(s, v, f, exact=False)
    assert fast.difference <= 1e-12 * max(1.0, fast.total_variation)


def test_coarea_rejects_negative_weight():
    with pytest.raises(InvalidParameterError):
        coarea_check(unit_grid(2), np.arange(4.0), -np.ones(4))
