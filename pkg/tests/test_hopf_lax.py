import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import path_space, random_spaces
from rcdlab.errors import InvalidParameterError, PreconditionError
from rcdlab.heat import HeatOperator
from rcdlab.hopf_lax import (
    c_transform,
    hopf_lax,
    hopf_lax_scan,
    kuwada_check,
    lipschitz_excess,
    preservation_experiment,
    sup_transform,
)
from rcdlab.oracles import brute_hopf_lax
from rcdlab.samplers import ModelSpec, sample_model
from rcdlab.space import MmSpace, ball, metric

dyadic_fields = st.lists(st.integers(-64, 64), min_size=60, max_size=60).map(lambda v: np.array(v) / 8.0)


def test_path_p1():
    res = hopf_lax(path_space([1.0, 1.0]), [0.0, 5.0, 0.0], p=1)
    assert np.array_equal(res.values, [0.0, 1.0, 0.0])
    assert res.argmin[1] == 0  # lowest id among the tied minimizers


def test_path_p2():
    res = hopf_lax(path_space([1.0, 1.0]), [0.0, 4.0, 0.0], p=2, t=1.0)
    assert res.values[1] == 0.5


def test_lipschitz_fields_are_fixed():
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=1.0, resolution=0.25))
    f = 0.5 * metric(s).row(3) - 0.25 * metric(s).row(10)
    assert lipschitz_excess(s, f) <= 0
    assert np.array_equal(c_transform(s, f).values, f)


def test_rejects_bad_parameters():
    s = path_space([1.0])
    with pytest.raises(InvalidParameterError):
        hopf_lax(s, [0.0, 1.0], p=0.5)
    with pytest.raises(InvalidParameterError):
        hopf_lax(s, [0.0, 1.0], p=2, t=0.0)
    with pytest.raises(InvalidParameterError):
        hopf_lax(s, [0.0, np.nan])


@given(random_spaces(max_n=20, dyadic=3), dyadic_fields)
def test_p1_matches_brute_force_exactly(s, f):
    f = f[: s.vertex_count]
    res = hopf_lax(s, f, 1.0, 1.0)
    vals, arg = brute_hopf_lax(s, f, 1.0, 1.0)
    assert np.array_equal(res.values, vals)
    assert np.array_equal(res.argmin, arg)


@given(random_spaces(max_n=20), dyadic_fields, st.sampled_from([1.5, 2.0, 3.0]), st.floats(0.25, 4.0))
def test_power_cost_matches_brute_force(s, f, p, t):
    f = f[: s.vertex_count]
    res = hopf_lax(s, f, p, t)
    vals, _ = brute_hopf_lax(s, f, p, t)
    assert np.allclose(res.values, vals, rtol=0, atol=1e-12)
    d = metric(s).table
    attained = f[res.argmin] + d[np.arange(s.vertex_count), res.argmin] ** p / (p * t ** (p - 1))
    assert np.allclose(attained, vals, rtol=0, atol=1e-12)


@given(random_spaces(max_n=20, dyadic=3), dyadic_fields)
def test_accelerated_path_equals_scan(s, f):
    f = f[: s.vertex_count]
    a, b = hopf_lax(s, f), hopf_lax_scan(s, f)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.argmin, b.argmin)


@given(random_spaces(max_n=20, dyadic=3), dyadic_fields, st.sampled_from([1.0, 2.0]))
def test_monotone_in_f(s, f, p):
    f = f[: s.vertex_count]
    g = f + np.abs(np.roll(f, 1))
    assert np.all(hopf_lax(s, f, p).values <= hopf_lax(s, g, p).values)


@given(random_spaces(max_n=20, dyadic=3), dyadic_fields)
def test_c_transform_idempotent(s, f):
    fc = c_transform(s, f[: s.vertex_count]).values
    assert np.array_equal(c_transform(s, fc).values, fc)
    assert lipschitz_excess(s, fc) <= 0


@given(random_spaces(max_n=15), st.floats(1.5, 4.0))
def test_nonincreasing_in_time(s, p):
    f = np.random.default_rng(0).normal(size=s.vertex_count)
    vals = [hopf_lax(s, f, p, t).values for t in (0.25, 0.5, 1.0, 2.0)]
    for a, b in zip(vals, vals[1:]):
        assert np.all(b <= a + 1e-12)
    assert np.all(vals[0] <= f)


@given(random_spaces(max_n=15))
def test_sup_transform_is_negated_conjugate(s):
    psi = np.random.default_rng(1).normal(size=s.vertex_count)
    d = metric(s).table
    assert np.allclose(sup_transform(s, psi).values, np.max(psi[None, :] - d, axis=1), atol=1e-12)


def cycle(n, h):
    edges = [(i, (i + 1) % n) for i in range(n)]
    return MmSpace(np.full(n, h), edges, np.full(n, h), np.full(n, 1 / h), dimension_hint=1)


def test_kuwada_trivial_cases():
    s = cycle(12, 0.25)
    op = HeatOperator(s)
    f = np.random.default_rng(2).uniform(0, 1, 12)
    diag = np.column_stack([np.arange(12), np.arange(12)])
    assert kuwada_check(s, op, f, 1.0, 0.0, [0.0], diag).max_violation <= 0
    assert kuwada_check(s, op, np.zeros(12), 2.0, 0.0, [0.0, 0.1, 1.0]).max_violation <= 1e-15
    with pytest.raises(InvalidParameterError):
        kuwada_check(s, op, f - 2, 1.0, 0.0, [0.1])


@pytest.mark.parametrize("n", [16, 32])
def test_kuwada_on_cycle(n):
    s = cycle(n, 1.0 / n)
    f = np.random.default_rng(n).uniform(0, 1, n)
    rep = kuwada_check(s, HeatOperator(s), f, 1.0, 0.0, [0.0, 0.001, 0.01, 0.1])
    assert rep.max_violation <= 1e-12
    assert len(rep.per_s) == 4


def test_preservation_with_lipschitz_input():
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=1.0, resolution=0.125, periodic=True))
    f = 0.5 * metric(s).row(0)
    lap = s.apply_laplacian(f)
    omega = ball(s, 27, 0.4).mask(s.vertex_count)
    eta = float(lap[omega].max())
    rep = preservation_experiment(s, f, omega, omega, eta, 0.0)
    assert rep.transformed_equals_input
    assert rep.excess <= 1e-12


def test_preservation_aborts_when_bound_fails():
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=1.0, resolution=0.125, periodic=True))
    f = np.cos(2 * math.pi * s.coords[:, 0])
    omega = ball(s, 27, 0.4).mask(s.vertex_count)
    eta = float(s.apply_laplacian(f)[omega].min()) - 1.0
    with pytest.raises(PreconditionError) as info:
        preservation_experiment(s, f, omega, omega, eta, 0.0)
    assert omega[info.value.vertex]


@pytest.mark.parametrize("h", [0.1, 0.05])
def test_preservation_on_flat_torus(h):
    s = sample_model(ModelSpec("euclidean_grid", N=2, extent=2.0, resolution=h, periodic=True))
    x, y = s.coords[:, 0], s.coords[:, 1]
    f = -(np.cos(math.pi * x) + np.cos(math.pi * y))
    center = int(np.argmin(x**2 + y**2))
    omega = ball(s, center, 0.8).mask(s.vertex_count)
    eta = float(s.apply_laplacian(f)[omega].max())
    inner = ball(s, center, 0.4).mask(s.vertex_count)
    inner &= omega[c_transform(s, f).argmin]
    rep = preservation_experiment(s, f, omega, inner, eta, 0.0)
    assert rep.hypothesis_excess <= 0
    assert rep.excess <= h
