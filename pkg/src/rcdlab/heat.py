"""Weighted graph Laplacian and its heat semigroup."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .errors import InvalidParameterError, SolverError
from .space import MmSpace, metric

EXACT_LIMIT = 2000


class HeatOperator:
    """Heat semigroup ``P_t = exp(tL)`` of a space.

    ``method="exact"`` diagonalizes the mass-symmetrized Laplacian
    ``M^{-1/2} (W - D) M^{-1/2}`` once; ``"implicit"`` runs backward Euler
    with ``steps`` sub-steps per application.  ``"auto"`` picks exact up to
    ``EXACT_LIMIT`` vertices.
    """

    def __init__(self, space: MmSpace, method: str = "auto", steps: int = 64, tol: float = 1e-10):
        if method == "auto":
            method = "exact" if space.vertex_count <= EXACT_LIMIT else "implicit"
        if method not in ("exact", "implicit"):
            raise InvalidParameterError(f"unknown heat method {method!r}")
        if steps < 1:
            raise InvalidParameterError("steps must be positive")
        self.space = space
        self.method = method
        self.steps = int(steps)
        self.tol = float(tol)
        self._lock = threading.Lock()
        self._eig = None
        self._lu = {}
        self._sqrt_m = np.sqrt(space.masses)

    def apply_laplacian(self, f) -> np.ndarray:
        return self.space.apply_laplacian(f)

    @property
    def eigen(self):
        """``(lam, U)`` with ``lam`` ascending (all ``<= 0`` up to round-off)."""
        with self._lock:
            if self._eig is None:
                w = self.space.weight_matrix.toarray()
                s = (w - np.diag(self.space.degrees)) / np.outer(self._sqrt_m, self._sqrt_m)
                lam, U = np.linalg.eigh((s + s.T) / 2)
                lam = np.minimum(lam, 0.0)
                self._eig = (lam, U)
            return self._eig

    def spectral_radius(self) -> float:
        if self.method == "exact":
            return float(-self.eigen[0][0])
        # Gershgorin bound on M^{-1}(D - W)
        return float(np.max(2 * self.space.degrees / self.space.masses))

    def _spectral(self, f, mult):
        lam, U = self.eigen
        f = np.asarray(f, dtype=float)
        g = self._sqrt_m[:, None] * f if f.ndim == 2 else self._sqrt_m * f
        coef = U.T @ g
        coef = (mult(lam)[:, None] * coef) if f.ndim == 2 else mult(lam) * coef
        out = U @ coef
        return out / (self._sqrt_m[:, None] if f.ndim == 2 else self._sqrt_m)

    def _implicit_lu(self, tau):
        key = float(tau)
        with self._lock:
            lu = self._lu.get(key)
            if lu is None:
                A = sparse.diags(self.space.masses) - tau * self.space.laplacian_matrix()
                lu = spla.splu(A.tocsc())
                if len(self._lu) > 8:
                    self._lu.clear()
                self._lu[key] = lu
            return lu

    def apply(self, f, t: float) -> np.ndarray:
        """Return ``P_t f``; ``P_0 f = f`` exactly."""
        t = float(t)
        if t < 0 or not math.isfinite(t):
            raise InvalidParameterError("t must be a finite nonnegative number")
        f = np.asarray(f, dtype=float)
        if f.shape[0] != self.space.vertex_count:
            raise InvalidParameterError("field length must equal vertex count")
        if t == 0:
            return f.copy()
        if self.method == "exact":
            return self._spectral(f, lambda lam: np.exp(lam * t))
        tau = t / self.steps
        lu = self._implicit_lu(tau)
        A = sparse.diags(self.space.masses) - tau * self.space.laplacian_matrix()
        u = f.copy()
        for _ in range(self.steps):
            rhs = self.space.masses * u if u.ndim == 1 else self.space.masses[:, None] * u
            nxt = lu.solve(rhs)
            res = np.max(np.abs(A @ nxt - rhs)) / max(1.0, np.max(np.abs(rhs)))
            if not np.isfinite(res) or res > self.tol * 1e3:
                raise SolverError("implicit heat step did not converge", residual=float(res))
            u = nxt
        return u

    def quotient(self, f, t: float) -> np.ndarray:
        """``(P_t f - f) / t`` computed without cancellation in exact mode."""
        if t <= 0:
            raise InvalidParameterError("t must be positive")
        if self.method == "exact":
            return self._spectral(f, lambda lam: np.expm1(lam * t) / t)
        return (self.apply(f, t) - np.asarray(f, dtype=float)) / t

    def kernel(self, x: int, t: float) -> np.ndarray:
        """Heat kernel density ``p_t(x, .)`` with respect to the vertex masses."""
        if t <= 0:
            raise InvalidParameterError("t must be positive")
        delta = np.zeros(self.space.vertex_count)
        delta[x] = 1.0 / self.space.masses[x]
        # p_t(x, y) = (P_t delta_x)(y) by symmetry of the kernel
        return self.apply(delta, t)

    def kernel_matrix(self, t: float) -> np.ndarray:
        """Dense ``p_t(x, y)``; exact mode only."""
        if self.method != "exact":
            raise InvalidParameterError("kernel_matrix needs exact mode")
        lam, U = self.eigen
        V = U / self._sqrt_m[:, None]
        return (V * np.exp(lam * t)) @ V.T


def heat_apply(op: HeatOperator, f, t: float) -> np.ndarray:
    return op.apply(f, t)


def heat_kernel(op: HeatOperator, x: int, t: float) -> np.ndarray:
    return op.kernel(x, t)


def bakry_emery_gap(op: HeatOperator, f, t: float, K: float) -> float:
    """Largest violation of ``|grad P_t f|^2 <= exp(-2Kt) P_t |grad f|^2``."""
    if t <= 0:
        raise InvalidParameterError("t must be positive")
    space = op.space
    f = np.asarray(f, dtype=float)
    lhs = space.gradient_modulus_sq(op.apply(f, t))
    rhs = math.exp(-2.0 * K * t) * op.apply(space.gradient_modulus_sq(f), t)
    return float(max(0.0, np.max(lhs - rhs)))


@dataclass(frozen=True)
class HeatLaplacianEstimate:
    value: float
    t_grid: tuple
    quotients: tuple
    monotone: bool
    spread: float = field(default=0.0)  # change between the last two extrapolants


def _neville_at_zero(ts, qs):
    """Values of successive polynomial interpolants evaluated at ``t = 0``."""
    ts = list(ts)
    table = list(qs)
    history = [table[-1]]
    n = len(ts)
    for k in range(1, n):
        for i in range(n - k):
            j = i + k
            table[i] = (ts[j] * table[i] - ts[i] * table[i + 1]) / (ts[j] - ts[i])
        history.append(table[0])
    return history


def default_t_grid(op: HeatOperator, count: int = 4) -> tuple:
    scale = 1.0 / max(op.spectral_radius(), 1e-300)
    return tuple(scale * 1e-3 / 2**k for k in range(count))


def heat_flow_laplacian(op: HeatOperator, f, x: int | None = None, t_grid=None):
    """Richardson-extrapolated limit of ``(P_t f - f)/t`` as ``t -> 0``.

    With ``x=None`` every vertex is estimated and arrays are returned in the
    ``value`` and ``quotients`` fields.
    """
    if t_grid is None:
        t_grid = default_t_grid(op)
    t_grid = tuple(float(t) for t in t_grid)
    if len(t_grid) < 3:
        raise InvalidParameterError("t_grid needs at least 3 points")
    if any(t <= 0 for t in t_grid) or any(b >= a for a, b in zip(t_grid, t_grid[1:])):
        raise InvalidParameterError("t_grid must be positive and strictly decreasing")
    q = np.array([op.quotient(f, t) for t in t_grid])  # (len(t_grid), n)
    if x is not None:
        q = q[:, [x]]
    diffs = np.diff(q, axis=0)
    monotone = bool(np.all((diffs >= 0).all(axis=0) | (diffs <= 0).all(axis=0)))
    hist = _neville_at_zero(t_grid, list(q))
    value = hist[-1]
    spread = float(np.max(np.abs(hist[-1] - hist[-2])))
    if x is not None:
        return HeatLaplacianEstimate(float(value[0]), t_grid, tuple(q[:, 0].tolist()), monotone, spread)
    return HeatLaplacianEstimate(value, t_grid, q, monotone, spread)


def gaussian_profile_slope(op: HeatOperator, x: int, t: float) -> float:
    """Least-squares slope of ``log p_t(x, y)`` against ``d(x, y)^2 / t``.

    Gaussian kernel bounds predict a negative slope of order ``-1/4``; the
    value is reported, not asserted against constants.
    """
    p = op.kernel(x, t)
    d = metric(op.space).row(x)
    keep = (p > 1e-300) & (d > 0)
    if keep.sum() < 2:
        return float("nan")
    A = np.column_stack([d[keep] ** 2 / t, np.ones(keep.sum())])
    coef, *_ = np.linalg.lstsq(A, np.log(p[keep]), rcond=None)
    return float(coef[0])
