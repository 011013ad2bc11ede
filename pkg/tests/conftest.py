import numpy as np
import pytest
from hypothesis import settings, strategies as st

from rcdlab.experiments import random_connected_space
from rcdlab.space import MmSpace

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def path_space(lengths, weights=None, masses=None):
    lengths = np.asarray(lengths, dtype=float)
    n = len(lengths) + 1
    edges = [(i, i + 1) for i in range(n - 1)]
    weights = np.ones(n - 1) if weights is None else np.asarray(weights, dtype=float)
    masses = np.ones(n) if masses is None else np.asarray(masses, dtype=float)
    coords = np.concatenate([[0.0], np.cumsum(lengths)])
    return MmSpace(masses, edges, lengths, weights, dimension_hint=1.0, coords=coords)


def unit_grid(nx, ny=None):
    """nx-by-ny lattice with unit lengths, weights and masses."""
    ny = nx if ny is None else ny
    vid = lambda i, j: i * ny + j  # noqa: E731
    edges = []
    for i in range(nx):
        for j in range(ny):
            if i + 1 < nx:
                edges.append((vid(i, j), vid(i + 1, j)))
            if j + 1 < ny:
                edges.append((vid(i, j), vid(i, j + 1)))
    coords = np.array([(i, j) for i in range(nx) for j in range(ny)], dtype=float)
    m = len(edges)
    return MmSpace(np.ones(nx * ny), edges, np.ones(m), np.ones(m), coords=coords)


def two_vertices(mass=1.0, weight=1.0):
    return MmSpace(np.full(2, mass), [(0, 1)], [1.0], [weight])


@st.composite
def random_spaces(draw, max_n=12, dyadic=None):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(2, max_n))
    extra = draw(st.integers(0, n))
    return random_connected_space(np.random.default_rng(seed), n, extra, dyadic=dyadic)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
