"""Upper Laplacian bounds in the distributional, heat-flow and comparison senses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import linalg as spla

from .errors import InvalidParameterError, SolverError
from .heat import HeatOperator, heat_flow_laplacian
from .space import MmSpace, as_mask

SENSES = ("distributional", "heat_flow", "comparison")
DISTRIBUTIONAL_TOL = 1e-12
HEAT_TOL = 1e-6
COMPARISON_TOL = 1e-10


@dataclass(frozen=True)
class VertexMeasure:
    """Signed measure given by its value on each singleton."""

    values: np.ndarray

    @property
    def positive(self) -> np.ndarray:
        return np.maximum(self.values, 0.0)

    @property
    def negative(self) -> np.ndarray:
        return np.maximum(-self.values, 0.0)

    def total(self, mask=None) -> float:
        vals = self.values if mask is None else self.values[mask]
        return float(np.sum(vals))


def distributional_laplacian(space: MmSpace, f) -> VertexMeasure:
    """``mu({x}) = m(x) (Lf)(x)``: the Laplacian of ``f`` tested against vertex indicators."""
    f = np.asarray(f, dtype=float)
    return VertexMeasure(space.weight_matrix @ f - space.degrees * f)


@dataclass(frozen=True)
class BoundCertificate:
    sense: str
    max_violation: float
    witness: Optional[int]
    tolerance: float
    signed_excess: float  # max over the region of (estimate - eta); may be negative

    @property
    def passed(self) -> bool:
        return self.witness is None


def _eta_array(space, eta):
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 0:
        return np.full(space.vertex_count, float(eta))
    if eta.shape != (space.vertex_count,):
        raise InvalidParameterError("eta must be a scalar or one value per vertex")
    return eta


def _certificate(sense, excess, region, tol):
    idx = np.flatnonzero(region)
    ex = excess[idx]
    k = int(np.argmax(ex))
    top = float(ex[k])
    witness = int(idx[k]) if top > tol else None
    return BoundCertificate(sense, max(0.0, top), witness, tol, top)


def comparison_subdomains(space: MmSpace, region: np.ndarray) -> list:
    """Test family for the comparison sense: singletons, 1-hop balls and the region itself."""
    n = space.vertex_count
    tests = []
    for x in np.flatnonzero(region):
        tests.append(np.array([x]))
    for x in np.flatnonzero(region):
        nb = space.neighbors(x)
        hop = np.union1d([x], nb[region[nb]])
        if len(hop) > 1:
            tests.append(hop)
    if region.sum() < n and region.sum() > 1:
        tests.append(np.flatnonzero(region))
    return tests


def dirichlet_poisson(space: MmSpace, sub: np.ndarray, eta: np.ndarray, boundary_values: np.ndarray):
    """Solve ``L g = eta`` on ``sub`` with ``g = boundary_values`` elsewhere."""
    n = space.vertex_count
    if len(sub) >= n:
        raise InvalidParameterError("subdomain must have a nonempty exterior")
    A = space.laplacian_matrix()
    inside = np.zeros(n, dtype=bool)
    inside[sub] = True
    g = np.array(boundary_values, dtype=float)
    g[inside] = 0.0
    rhs = space.masses[sub] * eta[sub] - (A[sub] @ g)
    block = A[sub][:, sub].tocsc()
    sol = spla.spsolve(block, rhs) if len(sub) > 1 else rhs / block.toarray()[0]
    sol = np.atleast_1d(sol)
    res = float(np.max(np.abs(block @ sol - rhs))) if len(sub) else 0.0
    scale = max(1.0, float(np.max(np.abs(rhs))))
    if not np.all(np.isfinite(sol)) or res > COMPARISON_TOL * scale:
        raise SolverError("Dirichlet Poisson solve failed", residual=res)
    g[inside] = sol
    return g


def check_upper_bound(space: MmSpace, f, eta, region=None, sense: str = "distributional",
                      heat_op: HeatOperator | None = None) -> BoundCertificate:
    """Check ``Lap f <= eta`` on ``region`` in the requested sense.

    Violations are reported in density units (``Lf - eta`` for the first two
    senses, ``max(g - f)`` for the comparison sense).
    """
    if sense not in SENSES:
        raise InvalidParameterError(f"unknown sense {sense!r}; expected one of {SENSES}")
    f = np.asarray(f, dtype=float)
    eta = _eta_array(space, eta)
    region = as_mask(space, region)
    if not region.any():
        raise InvalidParameterError("region must be nonempty")
    if sense == "distributional":
        mu = distributional_laplacian(space, f).values
        excess = (mu - eta * space.masses) / space.masses
        scale = max(1.0, float(np.max(np.abs(mu / space.masses))), float(np.max(np.abs(eta))))
        return _certificate(sense, excess, region, DISTRIBUTIONAL_TOL * scale)
    if sense == "heat_flow":
        op = heat_op or HeatOperator(space, method="exact")
        est = heat_flow_laplacian(op, f).value
        scale = max(1.0, float(np.max(np.abs(est))), float(np.max(np.abs(eta))))
        return _certificate(sense, est - eta, region, HEAT_TOL * scale)
    if region.all():
        raise InvalidParameterError("comparison sense needs a region with nonempty exterior")
    excess = np.full(space.vertex_count, -np.inf)
    for sub in comparison_subdomains(space, region):
        g = dirichlet_poisson(space, sub, eta, f)
        excess[sub] = np.maximum(excess[sub], g[sub] - f[sub])
    scale = max(1.0, float(np.max(np.abs(f))))
    return _certificate(sense, excess, region, COMPARISON_TOL * scale)


@dataclass(frozen=True)
class CrossValidation:
    cases: int
    verdicts: tuple  # per case: (distributional, heat_flow, comparison) booleans
    margins: tuple  # per case: |max over region of (Lf - eta)|
    band: float
    heat_agreement: float  # fraction of cases where distributional == heat_flow
    comparison_agreement: float  # among cases with margin > band
    ambiguous: int  # cases with margin <= band

    @property
    def all_agree(self) -> bool:
        return self.heat_agreement == 1.0 and self.comparison_agreement == 1.0


def cross_validate_senses(space: MmSpace, fields, etas, region=None, heat_op=None,
                          band: float = HEAT_TOL) -> CrossValidation:
    region = as_mask(space, region)
    op = heat_op or HeatOperator(space, method="exact")
    verdicts, margins = [], []
    for f, eta in zip(fields, etas):
        d = check_upper_bound(space, f, eta, region, "distributional")
        h = check_upper_bound(space, f, eta, region, "heat_flow", heat_op=op)
        c = check_upper_bound(space, f, eta, region, "comparison")
        verdicts.append((d.passed, h.passed, c.passed))
        margins.append(abs(d.signed_excess))
    n = len(verdicts)
    heat_ok = sum(v[0] == v[1] for v in verdicts)
    clear = [v for v, m in zip(verdicts, margins) if m > band]
    comp_ok = sum(v[0] == v[2] for v in clear)
    return CrossValidation(
        n,
        tuple(verdicts),
        tuple(margins),
        band,
        heat_ok / n if n else 1.0,
        comp_ok / len(clear) if clear else 1.0,
        n - len(clear),
    )


def dirichlet_energy(space: MmSpace, v, eta=0.0) -> float:
    """``E_eta(v) = 1/2 sum_edges w (dv)^2 + sum_x m v eta``."""
    v = np.asarray(v, dtype=float)
    eta = _eta_array(space, eta)
    dv = v[space.edges[:, 0]] - v[space.edges[:, 1]]
    return 0.5 * float(np.sum(space.weights * dv**2)) + float(np.sum(space.masses * v * eta))


def superminimizer_gap(space: MmSpace, f, eta, region=None, amplitudes=(1e-3, 1e-2, 1e-1, 1.0)) -> float:
    """Smallest ``E(f + a 1_x) - E(f)`` over vertices ``x`` of ``region`` and amplitudes ``a > 0``.

    Nonnegative exactly when ``f`` is a superminimizer against these
    perturbations.  Computed from the closed-form energy increment, which
    avoids cancellation between two large energies.
    """
    f = np.asarray(f, dtype=float)
    eta = _eta_array(space, eta)
    region = as_mask(space, region)
    mu = distributional_laplacian(space, f).values
    idx = np.flatnonzero(region)
    best = np.inf
    for a in amplitudes:
        inc = a * (space.masses[idx] * eta[idx] - mu[idx]) + 0.5 * a * a * space.degrees[idx]
        best = min(best, float(inc.min()))
    return best


def viscosity_probe(space: MmSpace, f, eta, region=None) -> BoundCertificate:
    """Probe with radial quadratic fields touching ``f`` from below on 1-hop neighbourhoods.

    At ``x`` the field ``phi = f(x) + c d(x, .)^2`` with the largest ``c``
    keeping ``phi <= f`` on the neighbours is tested for ``L phi(x) <=
    eta(x)``.  This is a diagnostic only: on a graph every field is an
    admissible test function and the full test class collapses to the
    pointwise bound.
    """
    f = np.asarray(f, dtype=float)
    eta = _eta_array(space, eta)
    region = as_mask(space, region)
    excess = np.full(space.vertex_count, -np.inf)
    indptr, indices, lens, eids = space.adjacency
    for x in np.flatnonzero(region):
        nb = indices[indptr[x]:indptr[x + 1]]
        d2 = lens[indptr[x]:indptr[x + 1]] ** 2
        c = np.min((f[nb] - f[x]) / d2)
        w = space.weights[eids[indptr[x]:indptr[x + 1]]]
        lphi = float(np.sum(w * c * d2)) / space.masses[x]
        excess[x] = lphi - eta[x]
    return _certificate("viscosity_probe", excess, region, DISTRIBUTIONAL_TOL * max(1.0, float(np.max(np.abs(eta)))))
