"""Zonal functions on S^d as functions of z in [-1, 1].

A function on the sphere that depends only on the height z has

    int |u|^r dsigma      = int |f|^r dnu_d,
    int |grad u|^2 dsigma = int |f'|^2 (1 - z^2) dnu_d,

with dnu_d = Z_d^{-1} (1 - z^2)^{d/2 - 1} dz a probability measure.  The
discretisation is nodal at the N Gauss-Jacobi points of dnu_d.  Products of
two polynomials of degree < N are integrated exactly, so the mass and
stiffness forms below are exact Galerkin forms on polynomials of degree
N - 1 and the discrete zonal spectrum of -Delta is exactly k(k + d - 1),
k < N.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import eval_jacobi

from sphere_bounds.constants import jacobi_normalization
from sphere_bounds.errors import DataError, DomainError

MIN_NODES = 8


def _recurrence(d, n):
    """Off-diagonal entries sqrt(b_k), k = 1..n-1, of the Jacobi matrix of dnu_d."""
    a = d / 2 - 1
    k = np.arange(1, n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = k * (k + 2 * a) / (4 * (k + a) ** 2 - 1)
    # k = 1 written in cancelled form, the generic one is 0/0 for d = 1
    b[0] = 1.0 / (d + 1)
    return np.sqrt(b)


def _orthonormal_values(d, n, x):
    """Orthonormal polynomials p_0..p_{n-1} of dnu_d evaluated at x, shape (n, len(x))."""
    off = _recurrence(d, n + 1)
    x = np.asarray(x, dtype=float)
    out = np.empty((n, x.size))
    out[0] = 1.0
    if n > 1:
        out[1] = x / off[0]
    for k in range(1, n - 1):
        out[k + 1] = (x * out[k] - off[k - 1] * out[k - 1]) / off[k]
    return out


@dataclass(frozen=True, eq=False)
class JacobiGrid:
    """Gauss-Jacobi nodes and weights of dnu_d with a nodal differentiation matrix.

    ``weights`` sum to one.  ``diff`` maps nodal values of a polynomial of
    degree < N to nodal values of its derivative.
    """

    d: int
    N: int
    nodes: np.ndarray
    weights: np.ndarray
    diff: np.ndarray
    bary: np.ndarray = field(repr=False)

    @functools.cached_property
    def stiffness(self) -> np.ndarray:
        """Matrix of the Dirichlet form: f^T K f = int |f'|^2 (1 - z^2) dnu_d."""
        flux = (self.weights * (1 - self.nodes**2))[:, None] * self.diff
        K = self.diff.T @ flux
        K = 0.5 * (K + K.T)
        K.flags.writeable = False
        return K

    @property
    def mass(self) -> np.ndarray:
        """Diagonal of the mass form (the quadrature weights)."""
        return self.weights

    def integrate(self, values) -> float:
        values = np.asarray(values, dtype=float)
        if values.shape != self.nodes.shape:
            raise DataError(f"expected {self.N} nodal values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("non-finite nodal values")
        return float(self.weights @ values)

    def dirichlet(self, values) -> float:
        values = np.asarray(values, dtype=float)
        return float(values @ (self.stiffness @ values))

    def derivative(self, values) -> np.ndarray:
        return self.diff @ np.asarray(values, dtype=float)

    def interpolate(self, values, x) -> np.ndarray:
        """Barycentric evaluation at arbitrary points of the interpolant through the nodes."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        values = np.asarray(values, dtype=float)
        diffs = x[:, None] - self.nodes[None, :]
        exact = np.isclose(diffs, 0.0, atol=1e-15, rtol=0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = self.bary / diffs
            out = (terms @ values) / terms.sum(axis=1)
        rows, cols = np.nonzero(exact)
        out[rows] = values[cols]
        return out

    def project_polynomial(self, values, degree=None) -> np.ndarray:
        """Coefficients of the nodal data in the orthonormal basis of dnu_d."""
        n = self.N if degree is None else degree
        basis = _orthonormal_values(self.d, n, self.nodes)
        return basis @ (self.weights * np.asarray(values, dtype=float))

    def zonal(self, func) -> "ZonalFunction":
        """Sample a callable of z on the nodes."""
        return ZonalFunction(self, np.asarray(func(self.nodes), dtype=float))


@functools.lru_cache(maxsize=64)
def build_grid(d: int, N: int) -> JacobiGrid:
    """Gauss-Jacobi grid of dnu_d with N nodes (Golub-Welsch + Christoffel weights)."""
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {d!r}")
    if int(N) != N or N < MIN_NODES:
        raise DomainError(f"need at least {MIN_NODES} nodes, got {N!r}")
    d, N = int(d), int(N)
    nodes = eigh_tridiagonal(np.zeros(N), _recurrence(d, N), eigvals_only=True)
    nodes = 0.5 * (nodes - nodes[::-1])  # exact symmetry
    # Christoffel numbers 1 / sum_k p_k(z_i)^2 are accurate also near the end points
    weights = 1.0 / np.sum(_orthonormal_values(d, N, nodes) ** 2, axis=0)
    weights = 0.5 * (weights + weights[::-1])
    weights /= weights.sum()

    # barycentric weights of Gauss-Jacobi nodes: (-1)^j sqrt((1 - z_j^2) w_j)
    bary = np.sqrt((1 - nodes**2) * weights)
    bary[1::2] *= -1
    bary /= np.abs(bary).max()
    diffs = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diffs, 1.0)
    D = (bary[None, :] / bary[:, None]) / diffs
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))

    for arr in (nodes, weights, D, bary):
        arr.flags.writeable = False
    return JacobiGrid(d=d, N=N, nodes=nodes, weights=weights, diff=D, bary=bary)


@dataclass(frozen=True, eq=False)
class ZonalFunction:
    """Nodal values of a function of z on a :class:`JacobiGrid`."""

    grid: JacobiGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise DataError(f"expected {self.grid.N} nodal values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("non-finite nodal values")
        object.__setattr__(self, "values", values)

    def __mul__(self, c):
        return ZonalFunction(self.grid, c * self.values)

    __rmul__ = __mul__

    def norm(self, r: float) -> float:
        """(int |f|^r dnu_d)^{1/r}, a quasi-norm for r < 1."""
        return integrate_power(self.grid, self.values, r) ** (1.0 / r)


def integrate_power(grid, values, r):
    return float(grid.weights @ np.abs(values) ** r)


def integrate(f: ZonalFunction) -> float:
    """Quadrature value of int f dnu_d."""
    return f.grid.integrate(f.values)


def dirichlet_form(f: ZonalFunction) -> float:
    """int |f'|^2 (1 - z^2) dnu_d, i.e. int |grad u|^2 dsigma for the zonal u."""
    return f.grid.dirichlet(f.values)


def evaluate_quotient(f: ZonalFunction, alpha: float, q: float) -> float:
    """(int |f'|^2 nu dnu_d + alpha int |f|^2 dnu_d) / (int |f|^q dnu_d)^{2/q}."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    if not q > 0:
        raise DomainError(f"q must be positive, got {q!r}")
    denom = integrate_power(f.grid, f.values, q)
    if denom == 0.0:
        raise DomainError("the quotient is undefined for f = 0")
    num = dirichlet_form(f) + alpha * integrate_power(f.grid, f.values, 2)
    return num / denom ** (2.0 / q)


class Pencil(NamedTuple):
    """Symmetric generalized eigenproblem A x = lambda M x."""

    A: np.ndarray
    M: np.ndarray


def assemble_schrodinger(V: ZonalFunction, sign: str = "minus", grid: JacobiGrid = None) -> Pencil:
    """Discrete zonal form of -Delta - V (``sign='minus'``) or -Delta + V (``'plus'``)."""
    if grid is not None and grid is not V.grid:
        raise DataError("potential lives on a different grid")
    if sign not in ("minus", "plus"):
        raise DomainError(f"sign must be 'minus' or 'plus', got {sign!r}")
    g = V.grid
    s = -1.0 if sign == "minus" else 1.0
    A = np.array(g.stiffness)
    A[np.diag_indices_from(A)] += s * g.weights * V.values
    M = np.diag(g.weights)
    return Pencil(A, M)


def gegenbauer(k: int, d: int, z) -> np.ndarray:
    """Zonal eigenfunction of degree k on S^d (Jacobi P_k^{(a,a)}, a = d/2 - 1)."""
    a = d / 2 - 1
    return eval_jacobi(k, a, a, np.asarray(z, dtype=float))


def zonal_eigenvalue(k: int, d: int) -> float:
    """Eigenvalue k(k + d - 1) of -Delta on degree-k spherical harmonics."""
    return float(k * (k + d - 1))
