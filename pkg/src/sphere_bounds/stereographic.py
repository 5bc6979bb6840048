"""Stereographic projection from the North Pole and the conformal pushforward.

A point of S^d is written y = (rho phi, z) with rho^2 + z^2 = 1 and phi on
S^{d-1}; its image is x = rho phi / (1 - z), so that

    r = |x| = sqrt((1 + z) / (1 - z)),   z = (r^2 - 1) / (r^2 + 1).

Radial functions v on R^d correspond to zonal functions on S^d through

    u(z) = ((r^2 + 1) / 2)^{(d-2)/2} v(r) = (1 - z)^{-(d-2)/2} v(r),

and for d >= 3 (domega the raw surface measure)

    int |grad u|^2 domega + alpha_* int u^2 domega = int |grad v|^2 dx,
    int |u|^q domega = int |v|^q (2 / (1 + r^2))^{d - (d-2) q/2} dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from sphere_bounds.constants import alpha_star, critical_exponent, sphere_surface
from sphere_bounds.errors import DataError, DomainError
from sphere_bounds.ultraspherical import JacobiGrid, ZonalFunction, build_grid

SPHERE_TO_PLANE = "sphere_to_plane"
PLANE_TO_SPHERE = "plane_to_sphere"

TAIL_RTOL = 1e-10
R_MAX = 1e12


# -- points -------------------------------------------------------------------

@dataclass(frozen=True)
class SpherePoint:
    """y = (rho phi, z) on S^d, stored as coordinates in R^{d+1} with z last."""

    coords: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.coords, dtype=float)
        if y.ndim != 1 or y.size < 2:
            raise DomainError("a sphere point needs at least two coordinates")
        if abs(float(y @ y) - 1.0) > 1e-10:
            raise DomainError(f"point is not on the unit sphere (|y|^2 = {float(y @ y)!r})")
        object.__setattr__(self, "coords", y)

    @property
    def z(self) -> float:
        return float(self.coords[-1])

    @property
    def rho(self) -> float:
        return float(np.linalg.norm(self.coords[:-1]))


@dataclass(frozen=True)
class PlanePoint:
    """x in R^d."""

    coords: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.coords, dtype=float)
        if x.ndim != 1 or x.size < 1:
            raise DomainError("a plane point needs at least one coordinate")
        object.__setattr__(self, "coords", x)

    @property
    def r(self) -> float:
        return float(np.linalg.norm(self.coords))


def project(y) -> PlanePoint:
    """Stereographic image x = rho phi / (1 - z) of a point other than the North Pole."""
    if not isinstance(y, SpherePoint):
        y = SpherePoint(y)
    z = y.z
    if z >= 1.0:
        raise DomainError("the North Pole z = 1 has no stereographic image")
    return PlanePoint(y.coords[:-1] / (1.0 - z))


def inverse_project(x) -> SpherePoint:
    """Preimage (2x / (1 + r^2), (r^2 - 1) / (r^2 + 1)) of x in R^d."""
    if not isinstance(x, PlanePoint):
        x = PlanePoint(x)
    r2 = float(x.coords @ x.coords)
    y = np.append(2.0 * x.coords / (1.0 + r2), (r2 - 1.0) / (r2 + 1.0))
    # renormalise away the last ulp so the point passes the sphere check
    return SpherePoint(y / np.linalg.norm(y))


def radius_of_height(z):
    """r(z) = sqrt((1 + z) / (1 - z)); infinite at the pole."""
    z = np.asarray(z, dtype=float)
    if np.any(z > 1) or np.any(z < -1):
        raise DomainError("heights must lie in [-1, 1]")
    with np.errstate(divide="ignore"):
        return np.sqrt((1.0 + z) / (1.0 - z))


def height_of_radius(r):
    """z(r) = (r^2 - 1) / (r^2 + 1), written to stay accurate for large r."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radii must be nonnegative")
    return 1.0 - 2.0 / (1.0 + r * r)


# -- functions ----------------------------------------------------------------

def conformal_exponent(d: int) -> float:
    """(d - 2)/2 for d >= 3; the weight is trivial for d <= 2."""
    return (d - 2) / 2 if d >= 3 else 0.0


def pushforward(f: Callable, direction: str, d: int) -> Callable:
    """Transport a radial profile v(r) to the zonal u(z) or back.

    ``plane_to_sphere``: u(z) = (1 - z)^{-(d-2)/2} v(r(z)).
    ``sphere_to_plane``: v(r) = (2 / (1 + r^2))^{(d-2)/2} u(z(r)).
    """
    a = conformal_exponent(d)
    if direction == PLANE_TO_SPHERE:
        def u(z):
            z = np.asarray(z, dtype=float)
            return (1.0 - z) ** (-a) * f(radius_of_height(z))
        return u
    if direction == SPHERE_TO_PLANE:
        def v(r):
            r = np.asarray(r, dtype=float)
            return (2.0 / (1.0 + r * r)) ** a * f(height_of_radius(r))
        return v
    raise DomainError(f"direction must be {PLANE_TO_SPHERE!r} or {SPHERE_TO_PLANE!r}, got {direction!r}")


def to_zonal(v: Callable, grid: JacobiGrid) -> ZonalFunction:
    """Nodal values of the pushforward of the radial profile ``v``."""
    return grid.zonal(pushforward(v, PLANE_TO_SPHERE, grid.d))


@dataclass(frozen=True)
class RadialFunction:
    """Radial profile v(r) on R^d with its derivative v'(r)."""

    value: Callable
    derivative: Callable
    label: str = ""

    def __call__(self, r):
        return self.value(np.asarray(r, dtype=float))


def aubin_talenti(d: int, eps: float = 1.0) -> RadialFunction:
    """v_eps(r) = (eps / (eps^2 + r^2))^{(d-2)/2}."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps!r}")
    a = (d - 2) / 2

    def value(r):
        return (eps / (eps * eps + r * r)) ** a

    def derivative(r):
        return -2.0 * a * r * (eps / (eps * eps + r * r)) ** a / (eps * eps + r * r)

    return RadialFunction(value, derivative, f"aubin_talenti(eps={eps})")


def gaussian(c: float = 1.0) -> RadialFunction:
    """v(r) = exp(-c r^2)."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c!r}")
    return RadialFunction(lambda r: np.exp(-c * r * r), lambda r: -2.0 * c * r * np.exp(-c * r * r),
                          f"gaussian(c={c})")


# -- plane-side quadrature ----------------------------------------------------

def radial_integral(f: Callable, d: int, rtol: float = TAIL_RTOL) -> float:
    """int_{R^d} f(|x|) dx = |S^{d-1}| int_0^inf f(r) r^{d-1} dr.

    Adaptive Gauss-Kronrod on [0, R] plus an algebraic tail C r^{-k} fitted at
    R and 2R.  R doubles until the fitted tail is below ``rtol`` of the total
    or changes by less than that between fits.  Raises DataError if the
    integrand does not decay faster than r^{-1}.
    """
    def g(r):
        return float(f(r)) * r ** (d - 1)

    def piece(a, b):
        val, _ = quad(g, a, b, limit=400, epsabs=0.0, epsrel=1e-13)
        return val

    def exponent(R):
        g1, g2 = abs(g(R)), abs(g(2 * R))
        if g1 == 0.0 or g2 == 0.0:
            return math.inf
        return math.log(g1 / g2) / math.log(2.0)

    R = 1.0
    body = piece(0.0, R)
    while True:
        body += piece(R, 2 * R)
        R *= 2
        k, k_next = exponent(R), exponent(2 * R)
        if k == math.inf:
            total = body
            break
        if k <= 1.0 + 1e-3 and R >= 64:
            raise DataError(f"integrand decays like r^-{k:.3g}; the integral diverges")
        tail = g(R) * R / (k - 1.0) if k > 1.0 else math.inf
        total = body + tail
        # accept once the tail is negligible, or once the decay is a clean power law
        settled = R >= 1e3 and abs(k - k_next) <= 1e-8 * k
        if math.isfinite(tail) and (abs(tail) <= rtol * abs(total) or settled):
            break
        if R > R_MAX:
            raise DataError("radial integral did not converge; slow decay")
    out = sphere_surface(d - 1) * total if d >= 2 else 2.0 * total
    if not math.isfinite(out):
        raise DataError("divergent radial integral")
    return out


# -- identities ---------------------------------------------------------------

@dataclass(frozen=True)
class IdentityReport:
    """Both sides of the two conformal identities and their relative residuals."""

    energy_sphere: float
    energy_plane: float
    power_sphere: float
    power_plane: float
    energy_residual: float
    power_residual: float
    meta: dict = field(default_factory=dict)

    def holds(self, tol: float = 1e-6) -> bool:
        return self.energy_residual <= tol and self.power_residual <= tol


def power_weight_exponent(q: float, d: int) -> float:
    """d - (d-2) q/2, the exponent of 2/(1+r^2) in the L^q identity."""
    return d - (d - 2) * q / 2


def _relative(a, b):
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


def energy_identity_check(v: RadialFunction, alpha: Optional[float], q: float, d: int,
                          N: int = 256) -> IdentityReport:
    """Evaluate both conformal identities by independent quadratures.

    The sphere side samples u on a Gauss-Jacobi grid and differentiates it
    spectrally; the plane side integrates v and v' radially.  ``alpha``
    defaults to alpha_* (the only value for which the energy identity holds);
    any other value adds (alpha - alpha_*) int u^2 domega to the sphere side
    and its plane counterpart int v^2 (2/(1+r^2))^2 dx to the plane side.
    """
    if d < 3:
        raise DomainError("the conformal identities need d >= 3")
    if not q > 0:
        raise DomainError(f"q must be positive, got {q!r}")
    a_star = alpha_star(d)
    alpha = a_star if alpha is None else float(alpha)
    grid = build_grid(d, N)
    area = sphere_surface(d)
    try:
        u = to_zonal(v, grid)
    except DataError as exc:
        raise DataError(f"pushforward is not finite on the grid: {exc}") from None
    gradient = area * grid.dirichlet(u.values)
    mass = area * grid.integrate(u.values**2)
    energy_sphere = gradient + a_star * mass
    power_sphere = area * grid.integrate(np.abs(u.values) ** q)

    energy_plane = radial_integral(lambda r: v.derivative(r) ** 2, d)
    if alpha != a_star:
        # the q = 2 identity carries int u^2 domega over to the plane
        plane_mass = radial_integral(lambda r: v(r) ** 2 * (2.0 / (1.0 + r * r)) ** 2, d)
        energy_sphere = gradient + alpha * mass
        energy_plane += (alpha - a_star) * plane_mass
    w = power_weight_exponent(q, d)
    power_plane = radial_integral(lambda r: abs(v(r)) ** q * (2.0 / (1.0 + r * r)) ** w, d)
    return IdentityReport(energy_sphere, energy_plane, power_sphere, power_plane,
                          _relative(energy_sphere, energy_plane), _relative(power_sphere, power_plane),
                          {"N": N, "alpha": alpha, "weight_exponent": w})


# -- Aubin-Talenti concentration ----------------------------------------------

def aubin_talenti_delta(d: int, eps: float) -> float:
    """delta(d, eps) = int_0^inf (eps / (eps^2 + r^2))^{d-2} r^{d-1} / (1 + r^2)^2 dr."""
    if int(d) != d or d < 3:
        raise DomainError(f"d must be an integer >= 3, got {d!r}")
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps!r}")

    def g(r):
        return (eps / (eps * eps + r * r)) ** (d - 2) * r ** (d - 1) / (1.0 + r * r) ** 2

    # split at the two length scales eps and 1
    knots = sorted({0.0, min(eps, 1.0), max(eps, 1.0)})
    total = sum(quad(g, a, b, limit=400, epsabs=0.0, epsrel=1e-12)[0]
                for a, b in zip(knots[:-1], knots[1:]))
    total += quad(g, knots[-1], np.inf, limit=400, epsabs=0.0, epsrel=1e-12)[0]
    return total


def aubin_talenti_delta_bound(d: int, eps: float) -> float:
    """Bound on delta(d, eps): eps pi/4 (d = 3), eps^2 int s^{d-1}/(1+s^2)^{d-2} ds (d >= 5).

    For d = 4 the scale-free integral diverges logarithmically; the bound
    eps^2 (1 + 2 log(1/eps)) valid for eps < 1 is used instead.
    """
    if d == 3:
        return eps * math.pi / 4
    if d == 4:
        if not eps < 1:
            raise DomainError("the d = 4 bound needs eps < 1")
        return eps * eps * (1.0 + 2.0 * math.log(1.0 / eps))
    c, _ = quad(lambda s: s ** (d - 1) / (1.0 + s * s) ** (d - 2), 0.0, np.inf, limit=400)
    return eps * eps * c


def aubin_talenti_norm(d: int) -> float:
    """||v_1||_{2*} on R^d (independent of eps by scaling)."""
    two_star = critical_exponent(d)
    return radial_integral(lambda r: (1.0 + r * r) ** (-float(d)), d) ** (1.0 / two_star)


def critical_quotient_bound(alpha: float, d: int, eps: float) -> float:
    """Q_alpha[u_eps] at q = 2* for the pushed-forward Aubin-Talenti profile (dsigma normalisation).

    Q = alpha_* + |S^d|^{-2/d} (alpha - alpha_*) 4 |S^{d-1}| delta(d, eps) / ||v_1||_{2*}^2.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    a_star = alpha_star(d)
    mass = 4.0 * sphere_surface(d - 1) * aubin_talenti_delta(d, eps)
    return a_star + sphere_surface(d) ** (-2.0 / d) * (alpha - a_star) * mass / aubin_talenti_norm(d) ** 2
