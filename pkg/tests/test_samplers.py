import math

import numpy as np
import pytest

from rcdlab.errors import InvalidParameterError, InvalidSpaceError
from rcdlab.samplers import ModelSpec, cone_angular_count, nearest_vertex, sample_model, tip_angle_sum


def test_one_dimensional_grid():
    s = sample_model(ModelSpec("euclidean_grid", N=1, extent=2.0, resolution=1.0))
    assert s.vertex_count == 3
    assert np.array_equal(s.lengths, [1.0, 1.0])
    # dual cells: half cells at the ends
    assert np.array_equal(s.masses, [0.5, 1.0, 0.5])


def test_three_by_three_grid():
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=1.0, resolution=0.5))
    assert (s.vertex_count, s.edge_count) == (9, 12)


def test_torus_is_regular():
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=1.0, resolution=0.125, periodic=True))
    assert s.vertex_count == 64
    assert np.all(s.degrees == 4)
    assert np.allclose(s.masses, 0.125**2)


@pytest.mark.parametrize(
    "spec, area",
    [
        (ModelSpec("euclidean_grid", N=2, extent=1.5, resolution=0.1), 1.5**2),
        (ModelSpec("euclidean_grid", N=3, extent=1.0, resolution=0.25), 1.0),
        (ModelSpec("sphere", K=1.0, resolution=0.1), 4 * math.pi),
        (ModelSpec("sphere", K=4.0, resolution=0.05), math.pi),
        (ModelSpec("hyperbolic_disc", K=-1.0, extent=1.0, resolution=0.1), 2.0 * 2 * math.sinh(1.0)),
        (ModelSpec("hyperbolic_disc", K=-1.0, extent=1.0, resolution=0.1, chart="horocyclic"),
         2.0 * (math.exp(1.0) - math.exp(-1.0))),
        (ModelSpec("circle_cone", cone_radius=0.5, extent=1.0, resolution=0.1), math.pi * 0.5),
        (ModelSpec("product_line", N=2, extent=1.0, resolution=0.25), 4.0),
        (ModelSpec("product_line", N=3, cone_radius=0.5, extent=1.0, resolution=0.25), 2.0 * math.pi * 0.5),
    ],
    ids=lambda v: v.kind if isinstance(v, ModelSpec) else None,
)
def test_total_mass_is_model_area(spec, area):
    s = sample_model(spec)
    assert s.total_mass == pytest.approx(area, rel=1e-12)


@pytest.mark.parametrize("r", [0.25, 0.5, 1.0])
def test_cone_laplacian_of_radius_squared(r):
    # finite-volume fluxes of rho^2 telescope: L rho^2 = 4 away from the rim
    s = sample_model(ModelSpec("circle_cone", cone_radius=r, extent=1.0, resolution=0.1))
    rho = s.chart[:, 0]
    Lf = s.apply_laplacian(rho**2)
    interior = rho < 1.0 - 1e-9
    assert np.allclose(Lf[interior], 4.0, rtol=0, atol=1e-10)


def test_cone_tip_angle():
    s = sample_model(ModelSpec("circle_cone", cone_radius=0.5, extent=1.0, resolution=0.1))
    assert tip_angle_sum(s) == pytest.approx(math.pi, rel=1e-12)
    m, dal = cone_angular_count(0.1, 0.5)
    assert m * dal == pytest.approx(math.pi)


def test_torus_laplacian_is_second_order():
    errs = []
    for h in (0.1, 0.05):
        s = sample_model(ModelSpec("euclidean_grid", N=2, extent=1.0, resolution=h, periodic=True))
        f = np.cos(2 * math.pi * s.coords[:, 0])
        errs.append(np.max(np.abs(s.apply_laplacian(f) + 4 * math.pi**2 * f)))
    assert errs[1] < errs[0] / 3.5


def test_nearest_vertex_uses_chart():
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=1.0, resolution=0.5))
    assert np.allclose(s.chart[nearest_vertex(s, [0.01, -0.02])], [0.0, 0.0])


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="torus"),
        dict(kind="euclidean_grid", K=1.0),
        dict(kind="sphere", K=-1.0),
        dict(kind="sphere", K=1.0, N=3),
        dict(kind="hyperbolic_disc", K=1.0),
        dict(kind="hyperbolic_disc", K=-1.0, chart="polar"),
        dict(kind="circle_cone", cone_radius=1.5),
        dict(kind="circle_cone", cone_radius=0.0),
        dict(kind="product_line", N=4),
        dict(kind="sphere", K=1.0, periodic=True),
        dict(kind="euclidean_grid", resolution=-0.1),
        dict(kind="euclidean_grid", N=1.5),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidParameterError):
        ModelSpec(**kwargs)


def test_resolution_too_coarse():
    with pytest.raises(InvalidSpaceError):
        sample_model(ModelSpec("euclidean_grid", extent=1.0, resolution=0.5, periodic=True))


def test_spec_roundtrip():
    spec = ModelSpec("hyperbolic_disc", K=-1.0, chart="horocyclic", resolution=0.05)
    assert ModelSpec(**spec.to_dict()) == spec
    assert spec.replace(resolution=0.1).resolution == 0.1
