import math

import numpy as np
import pytest
from hypothesis import given
from scipy.sparse import csgraph

from conftest import path_space, random_spaces
from rcdlab.errors import InvalidParameterError
from rcdlab.green import (
    boundary_ring,
    green_ball_domain,
    green_distance_check,
    green_function,
    green_residual,
    green_via_heat_integral,
)
from rcdlab.samplers import ModelSpec, nearest_vertex, sample_model
from rcdlab.space import MmSpace


def test_single_vertex_domain_on_path():
    g = green_function(path_space([1.0, 1.0]), 1, [1], N=3)
    assert g.values[1] == pytest.approx(0.5, abs=1e-15)
    assert g.values[0] == g.values[2] == 0.0
    assert g.green_distance[1] == 0.0


def test_grid_green_is_harmonic_off_pole():
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=2.0, resolution=0.1))
    x = nearest_vertex(s, [0.0, 0.0])
    dom = green_ball_domain(s, x, 0.8)
    g = green_function(s, x, dom, N=3)
    LG = s.apply_laplacian(g.values)
    off = dom.copy()
    off[x] = False
    assert np.max(np.abs(LG[off])) < 1e-10
    assert np.all(g.values[boundary_ring(s, dom)] == 0)
    assert green_residual(s, g) < 1e-12


def test_three_dimensional_green_approaches_continuum():
    # ball of radius R in R^3: G = (1/d - 1/R) / (4 pi)
    errs = []
    R = 1.4
    for h in (0.25, 0.125):
        s = sample_model(ModelSpec("euclidean_grid", N=3, extent=3.0, resolution=h))
        x = nearest_vertex(s, [0.0, 0.0, 0.0])
        e = np.linalg.norm(s.coords - s.coords[x], axis=1)
        g = green_function(s, x, e < R, N=3)
        sel = (e < R) & (e > 0.3) & (e < 0.9)
        cont = (1 / e[sel] - 1 / R) / (4 * math.pi)
        errs.append(np.max(np.abs(g.values[sel] / cont - 1)))
    assert errs[1] < errs[0] / 2
    assert errs[1] < 0.1


def test_green_distance_identity_improves_under_refinement():
    rel = []
    for h in (0.25, 0.125):
        s = sample_model(ModelSpec("euclidean_grid", N=3, extent=3.0, resolution=h))
        x = nearest_vertex(s, [0.0, 0.0, 0.0])
        e = np.linalg.norm(s.coords - s.coords[x], axis=1)
        g = green_function(s, x, e < 1.4, N=3)
        rep = green_distance_check(s, g, inner_radius=0.5, outer_radius=0.75)
        lo, hi = rep.two_sided
        assert 0 < lo <= hi < np.inf
        assert rep.dirichlet_residual < 1e-10
        rel.append(rep.relative_identity_residual)
    assert rel[1] < rel[0]


@given(random_spaces(max_n=14))
def test_positive_with_strict_minimum_at_pole(s):
    n = s.vertex_count
    dom = np.ones(n, dtype=bool)
    dom[n - 1] = False
    if not _connected(s, dom):
        return
    g = green_function(s, 0, dom, N=3)
    assert np.all(g.values[dom] > 0)
    assert g.residual < 1e-10
    others = dom.copy()
    others[0] = False
    assert np.all(g.green_distance[others] > 0)


@given(random_spaces(max_n=14))
def test_heat_integral_route_agrees(s):
    n = s.vertex_count
    dom = np.ones(n, dtype=bool)
    dom[n - 1] = False
    if not _connected(s, dom):
        return
    g = green_function(s, 0, dom, N=3)
    alt = green_via_heat_integral(s, 0, dom, T=5.0)
    assert np.allclose(alt, g.values, rtol=1e-9, atol=1e-12)


def _connected(s, mask):
    idx = np.flatnonzero(mask)
    return csgraph.connected_components(s.weight_matrix[idx][:, idx], directed=False)[0] == 1


@pytest.mark.parametrize(
    "domain, pole, N",
    [
        ([1], 1, 2.0),
        ([1], 1, 1.5),
        ([0, 1, 2, 3], 1, 3.0),
        ([], 1, 3.0),
        ([1], 0, 3.0),
        ([0, 2], 0, 3.0),
    ],
    ids=["N=2", "N<2", "whole-space", "empty", "pole-outside", "disconnected"],
)
def test_invalid_green_requests(domain, pole, N):
    s = path_space([1.0, 1.0, 1.0])
    with pytest.raises(InvalidParameterError):
        green_function(s, pole, np.array(domain, dtype=np.int64), N=N)


def test_dimension_default_comes_from_space():
    s = MmSpace(np.ones(3), [(0, 1), (1, 2)], np.ones(2), np.ones(2), dimension_hint=2.0)
    with pytest.raises(InvalidParameterError):
        green_function(s, 1, [1])
