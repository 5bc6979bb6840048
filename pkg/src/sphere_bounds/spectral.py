"""Ground-state energies of zonal Schroedinger operators on S^d and the
Keller-Lieb-Thirring type bounds they satisfy.

    |lambda_1(-Delta - V)| <= alpha(||V_+||_p),        q = 2p/(p-1)
    lambda_1(-Delta + W)   >= nu(||W^{-1}||_p^{-1}),    q = 2p/(p+1)
    exp(-lambda_1(-Delta + W)/alpha) <= (alpha/xi(alpha)) (int exp(-p W/alpha))^{1/p}

Norms use the probability measure; ``domega`` quantities are |S^d| times the
corresponding ``dsigma`` integrals.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import eigsh

from sphere_bounds import sphere_constants as sc
from sphere_bounds.constants import INF, alpha_star, exponents, q_from_p, sphere_surface
from sphere_bounds.errors import DataError, DomainError
from sphere_bounds.ultraspherical import (JacobiGrid, ZonalFunction, assemble_schrodinger,
                                         build_grid, gegenbauer)

DENSE_LIMIT = 512


@dataclass(frozen=True, eq=False)
class Potential:
    """Zonal potential: a constant, or nodal values on a grid.

    ``kind`` is 'constant', 'nodal' or 'equality' (nodal values built from
    an extremal function; ``meta`` records how).
    """

    kind: str
    constant: Optional[float] = None
    values: Optional[ZonalFunction] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == "constant":
            if self.constant is None or not math.isfinite(self.constant):
                raise DataError("constant potential needs a finite value")
        elif self.kind in ("nodal", "equality"):
            if not isinstance(self.values, ZonalFunction):
                raise DataError("nodal potential needs a ZonalFunction")
        else:
            raise DataError(f"unknown potential kind {self.kind!r}")

    @classmethod
    def const(cls, c: float) -> "Potential":
        return cls("constant", constant=float(c))

    @classmethod
    def nodal(cls, values: ZonalFunction) -> "Potential":
        return cls("nodal", values=values)

    @classmethod
    def from_function(cls, func, grid: JacobiGrid) -> "Potential":
        return cls("nodal", values=grid.zonal(func))

    @classmethod
    def from_csv(cls, path, grid: JacobiGrid) -> "Potential":
        """Read a two-column (z, value) table with a header row; interpolate onto ``grid``."""
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 2:
            raise DataError(f"{path}: need a header row and at least one data row")
        try:
            data = np.array([[float(x) for x in row[:2]] for row in rows[1:] if row], dtype=float)
        except ValueError as exc:
            raise DataError(f"{path}: non-numeric entry ({exc})") from None
        if data.ndim != 2 or data.shape[1] != 2:
            raise DataError(f"{path}: expected two columns")
        if not np.all(np.isfinite(data)):
            raise DataError(f"{path}: non-finite entry")
        z, v = data[:, 0], data[:, 1]
        if np.any(np.abs(z) > 1):
            raise DataError(f"{path}: z values must lie in [-1, 1]")
        order = np.argsort(z)
        z, v = z[order], v[order]
        if np.any(np.diff(z) <= 0):
            raise DataError(f"{path}: repeated z values")
        if z.size == 1:
            return cls.const(v[0])
        values = _barycentric(z, v, grid.nodes)
        return cls("nodal", values=ZonalFunction(grid, values), meta={"source": str(path)})

    def on(self, grid: JacobiGrid) -> ZonalFunction:
        """Nodal values on ``grid`` (barycentric interpolation if it lives elsewhere)."""
        if self.kind == "constant":
            return ZonalFunction(grid, np.full(grid.N, self.constant))
        if self.values.grid is grid:
            return self.values
        return ZonalFunction(grid, self.values.grid.interpolate(self.values.values, grid.nodes))

    @property
    def grid(self) -> Optional[JacobiGrid]:
        return None if self.values is None else self.values.grid


def _barycentric(x, y, t):
    """Interpolate (x, y) at t with barycentric weights for arbitrary distinct nodes."""
    diffs = x[:, None] - x[None, :]
    np.fill_diagonal(diffs, 1.0)
    weights = 1.0 / np.prod(diffs, axis=1)
    weights /= np.abs(weights).max()
    d = t[:, None] - x[None, :]
    exact = d == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = weights / d
        out = (terms @ y) / terms.sum(axis=1)
    rows, cols = np.nonzero(exact)
    out[rows] = y[cols]
    return out


@dataclass(frozen=True, eq=False)
class EigenReport:
    """Eigenvalue against its bound; ``slack`` >= 0 means the inequality holds."""

    lambda1: float
    bound: float
    slack: float
    norm: float
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("lambda1", "bound", "slack", "norm"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-7


def _resolve_grid(pot: Potential, grid: Optional[JacobiGrid], d: Optional[int]) -> JacobiGrid:
    if grid is not None:
        return grid
    if pot.grid is not None:
        return pot.grid
    if d is None:
        raise DomainError("a grid or a dimension is needed for a constant potential")
    return build_grid(d, sc.DEFAULT_OPTIONS.N)


def ground_state(pot: Potential, sign: str = "minus", grid: Optional[JacobiGrid] = None,
                 d: Optional[int] = None):
    """(lambda_1, eigenvector) of -Delta - V (``minus``) or -Delta + W (``plus``)."""
    grid = _resolve_grid(pot, grid, d)
    V = pot.on(grid)
    if sign == "plus" and not np.all(V.values > 0):
        raise DomainError("the potential must be positive for sign='plus'")
    A, M = assemble_schrodinger(V, sign)
    if grid.N <= DENSE_LIMIT:
        vals, vecs = eigh(A, M, subset_by_index=[0, 0])
    else:
        # shift below the spectrum: -Delta >= 0 and the potential term is bounded
        shift = -np.abs(V.values).max() - 1.0
        vals, vecs = eigsh(A, k=1, M=M, sigma=shift, which="LM")
    vec = vecs[:, 0]
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    return float(vals[0]), vec


def lambda1(pot: Potential, sign: str = "minus", grid: Optional[JacobiGrid] = None,
            d: Optional[int] = None) -> float:
    """Smallest eigenvalue of the zonal pencil of -Delta -/+ V."""
    return ground_state(pot, sign, grid, d)[0]


def lp_norm(values: ZonalFunction, p: float) -> float:
    """(int |f|^p dsigma)^{1/p}."""
    return values.norm(p)


def equality_potential(mu_val: float, d: int, q: float,
                       opts: sc.SolverOptions = sc.DEFAULT_OPTIONS) -> Potential:
    """V = mu u^{q-2} with u the minimiser at alpha(mu), normalised by ||u||_q = 1.

    Then ||V||_p = mu and u is the ground state of -Delta - V with energy -alpha(mu).
    """
    if not mu_val > 0:
        raise DomainError(f"mu must be positive, got {mu_val!r}")
    exponents(d, q)
    if sc.on_exact_line(mu_val, d / (q - 2)):
        return Potential("constant", constant=float(mu_val), meta={"alpha": float(mu_val)})
    alpha = sc.alpha_of_mu(mu_val, d, q, opts)
    res = sc.mu(alpha, d, q, opts)
    u = res.minimizer
    V = ZonalFunction(u.grid, mu_val * np.abs(u.values) ** (q - 2))
    return Potential("equality", values=V, meta={"alpha": alpha, "mu": res.value})


def _klt_exponent(p, d):
    if d == 1 and p == 1:
        return INF
    if not p > 1:
        raise DomainError(f"p must exceed 1 (or equal 1 with d = 1), got {p!r}")
    if d >= 3 and p < d / 2:
        raise DomainError(f"p = {p} is below d/2 = {d / 2}")
    return q_from_p(p, "negative")


def klt_report(V: Potential, p: float, d: int, grid: Optional[JacobiGrid] = None,
               opts: sc.SolverOptions = sc.DEFAULT_OPTIONS) -> EigenReport:
    """|lambda_1(-Delta - V)| against alpha(||V_+||_p), with the small-norm dsigma and domega forms."""
    q = _klt_exponent(p, d)
    grid = _resolve_grid(V, grid, d)
    if grid.d != d:
        raise DomainError("grid dimension does not match d")
    values = V.on(grid)
    positive = ZonalFunction(grid, np.maximum(values.values, 0.0))
    mu_val = lp_norm(positive, p) if q != INF else lp_norm(positive, 1.0)
    lam = lambda1(V, "minus", grid)
    magnitude = abs(min(lam, 0.0))
    critical = d >= 3 and p == d / 2
    if mu_val == 0.0:
        bound = 0.0
    elif critical:
        # only the line alpha(mu) = mu for mu <= alpha_* is available at p = d/2
        if mu_val > alpha_star(d):
            raise DomainError(f"p = d/2: no bound for ||V||_p = {mu_val} > alpha_* = {alpha_star(d)}")
        bound = mu_val
    else:
        bound = sc.alpha_of_mu(mu_val, d, q, opts)
    extras = {"q": q, "domega_integral": sphere_surface(d) * positive.norm(p) ** p}
    if not critical and q != INF:
        gamma = p - d / 2
        if sc.on_exact_line(mu_val, d * (p - 1) / 2):
            lhs = magnitude ** p
            extras["small_norm_lhs"] = lhs
            extras["small_norm_dsigma_ok"] = lhs <= positive.norm(p) ** p * (1 + 1e-12) + 1e-300
            extras["small_norm_domega_ok"] = lhs <= extras["domega_integral"] * (1 + 1e-12) + 1e-300
        if gamma > 0 and mu_val > 0:
            from sphere_bounds.euclidean import klt_constants

            L = klt_constants(gamma, d)
            extras["semiclassical_ratio"] = magnitude**gamma / (L * extras["domega_integral"])
    return EigenReport(lam, bound, bound - magnitude, mu_val, extras)


def dual_equality_potential(beta: float, d: int, q: float,
                            opts: sc.SolverOptions = sc.DEFAULT_OPTIONS) -> Potential:
    """W = beta ||u||_q^{2-q} u^{q-2} from the nu-minimiser u, so that ||W^{-1}||_p^{-1} = beta."""
    res = sc.nu(beta, d, q, opts)
    if res.minimizer is None:
        return Potential("constant", constant=float(beta), meta={"nu": res.value})
    u = res.minimizer
    W = sc.nu_optimal_potential(u.grid, u.values, beta, q)
    return Potential("equality", values=ZonalFunction(u.grid, W), meta={"nu": res.value})


def dual_klt_report(W: Potential, p: float, d: int, grid: Optional[JacobiGrid] = None,
                    opts: sc.SolverOptions = sc.DEFAULT_OPTIONS) -> EigenReport:
    """lambda_1(-Delta + W) against nu(beta), beta = ||W^{-1}||_p^{-1}."""
    if not p > 0:
        raise DomainError(f"p must be positive, got {p!r}")
    grid = _resolve_grid(W, grid, d)
    values = W.on(grid)
    if not np.all(values.values > 0):
        raise DomainError("W must be positive at every node")
    q = q_from_p(p, "positive")
    inverse = ZonalFunction(grid, 1.0 / values.values)
    beta = 1.0 / inverse.norm(p)
    lam = lambda1(W, "plus", grid)
    bound = sc.nu(beta, d, q, opts).value
    integral = sphere_surface(d) * inverse.norm(p) ** p
    extras = {"q": q, "domega_integral": integral}
    if p >= 1 and sc.on_exact_line(beta, d * (p + 1) / 2):
        lhs = lam ** (-p)
        extras["small_norm_lhs"] = lhs
        extras["small_norm_dsigma_ok"] = lhs <= beta ** (-p) * (1 + 1e-12)
        extras["small_norm_domega_ok"] = lhs <= integral * (1 + 1e-12)
    gamma = p + d / 2
    from sphere_bounds.euclidean import klt_constants

    try:
        L = klt_constants(gamma, d, branch="positive")
        extras["semiclassical_ratio"] = lam ** (-gamma) / (L * integral)
    except DomainError:
        pass
    return EigenReport(lam, bound, lam - bound, beta, extras)


def logsob_report(W: Potential, alpha: float, p: float, d: int,
                  grid: Optional[JacobiGrid] = None,
                  opts: sc.SolverOptions = sc.DEFAULT_OPTIONS) -> EigenReport:
    """exp(-lambda_1(-Delta + W)/alpha) against (alpha/xi(alpha)) (int exp(-p W/alpha))^{1/p}.

    Both sides are compared in logarithmic form; ``bound`` is the lower bound
    alpha log(xi/alpha) - (alpha/p) log int exp(-p W/alpha) on lambda_1.
    """
    grid = _resolve_grid(W, grid, d)
    values = W.on(grid).values
    xi_val = sc.xi(alpha, d, p, opts).value
    # W may change sign here, so the pencil is assembled directly
    A, M = assemble_schrodinger(ZonalFunction(grid, values), "plus")
    lam = float(eigh(A, M, subset_by_index=[0, 0], eigvals_only=True)[0])
    # log of int exp(-p W/alpha) dsigma, computed stably
    expo = -p * values / alpha
    top = expo.max()
    log_integral = top + math.log(grid.weights @ np.exp(expo - top))
    bound = alpha * math.log(xi_val / alpha) - alpha / p * log_integral
    extras = {"xi": xi_val, "log_lhs": -lam / alpha,
              "log_rhs": math.log(alpha / xi_val) + log_integral / p}
    return EigenReport(lam, bound, lam - bound, xi_val, extras)


def logsob_optimal_potential(alpha: float, d: int, p: float,
                             opts: sc.SolverOptions = sc.DEFAULT_OPTIONS) -> Potential:
    """W = -(alpha/p) log u^2 from the xi-minimiser u (|u|^2 = e^{-pW/alpha} / int e^{-pW/alpha})."""
    res = sc.xi(alpha, d, p, opts)
    if res.minimizer is None:
        return Potential("constant", constant=0.0, meta={"xi": res.value})
    u = res.minimizer
    u2 = np.maximum(u.values**2, np.finfo(float).tiny)
    W = -(alpha / p) * np.log(u2)
    return Potential("equality", values=ZonalFunction(u.grid, W), meta={"xi": res.value})


def random_zonal_potential(grid: JacobiGrid, rng: np.random.Generator, degree: int = 6,
                           kind: str = "nonnegative", scale: float = 1.0) -> Potential:
    """Random low-degree Gegenbauer sum.

    ``nonnegative``: clipped at zero; ``positive``: exponentiated; ``signed``: as drawn.
    """
    d = grid.d
    z = grid.nodes
    coeffs = rng.uniform(-1.0, 1.0, degree + 1) / (1.0 + np.arange(degree + 1))
    basis = np.array([gegenbauer(k, d, z) / max(1.0, np.abs(gegenbauer(k, d, 1.0))) for k in
                      range(degree + 1)])
    series = scale * (coeffs @ basis)
    if kind == "nonnegative":
        values = np.maximum(series + 0.3 * scale, 0.0)
    elif kind == "positive":
        values = scale * np.exp(series / max(scale, 1e-300))
    elif kind == "signed":
        values = series
    else:
        raise DomainError(f"unknown kind {kind!r}")
    return Potential("nodal", values=ZonalFunction(grid, values), meta={"degree": degree})
