import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from conftest import path_space, random_spaces, two_vertices
from rcdlab.errors import InvalidParameterError
from rcdlab.heat import (
    HeatOperator,
    bakry_emery_gap,
    gaussian_profile_slope,
    heat_apply,
    heat_flow_laplacian,
    heat_kernel,
)
from rcdlab.oracles import two_vertex_heat
from rcdlab.samplers import ModelSpec, nearest_vertex, sample_model

T_HALF = math.log(2) / 2


def generator(space):
    return np.diag(1 / space.masses) @ space.laplacian_matrix().toarray()


def test_two_vertex_closed_form():
    op = HeatOperator(two_vertices())
    out = heat_apply(op, [1.0, 0.0], T_HALF)
    assert out[0] == pytest.approx(0.75, abs=1e-15)
    assert np.allclose(out, two_vertex_heat(T_HALF), atol=1e-15)
    assert heat_kernel(op, 0, T_HALF)[0] == pytest.approx(0.75, abs=1e-15)


def test_two_vertex_equilibrium():
    op = HeatOperator(two_vertices(mass=2.0))
    assert np.allclose(op.kernel(0, 200.0), 1 / 4.0, atol=1e-15)


@pytest.mark.parametrize("method", ["exact", "implicit"])
def test_constants_and_identity(method):
    s = path_space([1.0, 0.5, 2.0], weights=[1.0, 3.0, 0.5], masses=[1.0, 2.0, 0.5, 1.5])
    op = HeatOperator(s, method=method)
    assert np.allclose(op.apply(np.full(4, 3.0), 0.7), 3.0, atol=1e-12)
    f = np.array([1.0, -2.0, 0.5, 4.0])
    assert np.array_equal(op.apply(f, 0.0), f)


@given(random_spaces(), st.floats(0.01, 3.0))
def test_exact_mode_matches_matrix_exponential(s, t):
    f = np.random.default_rng(0).normal(size=s.vertex_count)
    ref = expm(t * generator(s)) @ f
    assert np.allclose(HeatOperator(s, "exact").apply(f, t), ref, atol=1e-11)


@given(random_spaces(), st.floats(0.01, 3.0))
def test_mass_conservation_and_stochastic_completeness(s, t):
    op = HeatOperator(s)
    f = np.random.default_rng(1).normal(size=s.vertex_count)
    assert math.isclose(np.dot(s.masses, op.apply(f, t)), np.dot(s.masses, f), abs_tol=1e-11)
    P = op.kernel_matrix(t)
    assert np.allclose(P @ s.masses, 1.0, atol=1e-11)
    assert np.allclose(P, P.T, atol=1e-12)
    assert np.all(P > -1e-12)


@given(random_spaces(), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_semigroup_law(s, t, u):
    op = HeatOperator(s)
    f = np.random.default_rng(2).normal(size=s.vertex_count)
    assert np.allclose(op.apply(op.apply(f, t), u), op.apply(f, t + u), atol=1e-11)


@given(random_spaces(), st.floats(0.01, 2.0))
def test_order_preserving(s, t):
    rng = np.random.default_rng(3)
    f = rng.normal(size=s.vertex_count)
    g = f + rng.uniform(0, 1, size=s.vertex_count)
    op = HeatOperator(s)
    assert np.all(op.apply(f, t) <= op.apply(g, t) + 1e-12)


@given(random_spaces())
def test_laplacian_self_adjoint_and_kills_constants(s):
    rng = np.random.default_rng(4)
    f, g = rng.normal(size=(2, s.vertex_count))
    assert np.allclose(s.apply_laplacian(np.ones(s.vertex_count)), 0.0, atol=1e-13)
    lhs = np.dot(s.masses * s.apply_laplacian(f), g)
    rhs = np.dot(s.masses * f, s.apply_laplacian(g))
    assert math.isclose(lhs, rhs, rel_tol=1e-11, abs_tol=1e-11)


@given(random_spaces())
def test_energy_identity_for_gradient(s):
    # sum m |grad f|^2 = -sum m f Lf, the discrete Dirichlet form
    f = np.random.default_rng(5).normal(size=s.vertex_count)
    lhs = np.dot(s.masses, s.gradient_modulus_sq(f))
    rhs = -np.dot(s.masses * f, s.apply_laplacian(f))
    assert math.isclose(lhs, rhs, rel_tol=1e-11, abs_tol=1e-12)


def test_implicit_mode_converges_to_exact():
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=1.0, resolution=0.1))
    f = np.cos(math.pi * s.coords[:, 0]) + s.coords[:, 1] ** 2
    exact = HeatOperator(s, "exact").apply(f, 0.05)
    errs = [np.max(np.abs(HeatOperator(s, "implicit", steps=k).apply(f, 0.05) - exact)) for k in (32, 64)]
    assert errs[1] < 0.6 * errs[0]
    assert errs[1] < 5e-3
    imp = HeatOperator(s, "implicit").apply(f, 0.05)
    assert math.isclose(np.dot(s.masses, imp), np.dot(s.masses, f), rel_tol=1e-12)


def test_heat_flow_laplacian_two_vertices():
    est = heat_flow_laplacian(HeatOperator(two_vertices()), [1.0, 0.0], 0)
    assert est.value == pytest.approx(-1.0, abs=1e-10)
    assert est.monotone


def test_heat_flow_laplacian_constant_and_parabola():
    s = path_space(np.ones(6))
    op = HeatOperator(s)
    assert heat_flow_laplacian(op, np.full(7, 2.0), 3).value == pytest.approx(0.0, abs=1e-12)
    x = np.arange(7.0)
    assert heat_flow_laplacian(op, x**2, 3).value == pytest.approx(2.0, rel=1e-9)


@given(random_spaces(max_n=30))
def test_heat_flow_laplacian_matches_generator(s):
    f = np.random.default_rng(6).normal(size=s.vertex_count)
    Lf = s.apply_laplacian(f)
    est = heat_flow_laplacian(HeatOperator(s, "exact"), f)
    scale = max(1.0, float(np.max(np.abs(Lf))))
    assert np.max(np.abs(est.value - Lf)) / scale < 1e-6


def test_heat_flow_grid_validation():
    op = HeatOperator(two_vertices())
    with pytest.raises(InvalidParameterError):
        heat_flow_laplacian(op, [1.0, 0.0], 0, t_grid=(1e-3, 2e-3, 1e-4))
    with pytest.raises(InvalidParameterError):
        heat_flow_laplacian(op, [1.0, 0.0], 0, t_grid=(1e-3, 1e-4))
    with pytest.raises(InvalidParameterError):
        op.apply([1.0, 0.0], -1.0)


def test_bakry_emery_constant_field():
    s = sample_model(ModelSpec("sphere", K=1.0, resolution=0.2))
    assert bakry_emery_gap(HeatOperator(s), np.full(s.vertex_count, 1.5), 0.1, 1.0) <= 1e-20


@pytest.mark.parametrize("h", [0.1, 0.05])
def test_bakry_emery_flat_grid(h):
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=1.0, resolution=h))
    op = HeatOperator(s)
    assert bakry_emery_gap(op, s.coords[:, 0], 0.01, 0.0) <= h
    t = sample_model(ModelSpec("euclidean_grid", N=2, extent=1.0, resolution=h, periodic=True))
    f = np.cos(2 * math.pi * t.coords[:, 0])
    assert bakry_emery_gap(HeatOperator(t), f, 0.05, 0.0) <= h


def test_bakry_emery_sphere_random_field():
    s = sample_model(ModelSpec("sphere", K=1.0, resolution=0.2))
    f = np.random.default_rng(7).normal(size=s.vertex_count)
    assert bakry_emery_gap(HeatOperator(s), f, 0.05, 1.0) <= 0.2


def test_bakry_emery_detects_excessive_curvature():
    s = path_space(np.ones(4), weights=[1.0, 2.0, 0.5, 1.0])
    f = np.array([0.0, 1.0, -1.0, 2.0, 0.5])
    assert bakry_emery_gap(HeatOperator(s), f, 0.1, 10.0) > 0.0


def test_gaussian_profile_slope_is_negative():
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=2.0, resolution=0.1))
    x = nearest_vertex(s, [0.0, 0.0])
    assert gaussian_profile_slope(HeatOperator(s), x, 0.05) < 0
