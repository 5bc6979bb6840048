"""Closed-form geometric constants and exponent bookkeeping.

All sphere integrals elsewhere in the package are taken against the uniform
probability measure ``dsigma``; the constants here convert to the raw surface
measure ``domega = |S^d| dsigma`` and to Euclidean normalisations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from sphere_bounds.errors import DomainError

INF = math.inf

# CPython's math.gamma is a Lanczos approximation accurate to a few ulp.
gamma = math.gamma


def _check_dimension(d, minimum=1):
    if int(d) != d or d < minimum:
        raise DomainError(f"dimension must be an integer >= {minimum}, got {d!r}")
    return int(d)


def sphere_surface(d: int) -> float:
    """Area |S^d| of the unit d-sphere in R^{d+1}."""
    d = _check_dimension(d)
    return 2.0 * math.pi ** ((d + 1) / 2) / gamma((d + 1) / 2)


def jacobi_normalization(d: int) -> float:
    """Z_d = sqrt(pi) Gamma(d/2) / Gamma((d+1)/2), the mass of (1-z^2)^{d/2-1} on [-1, 1]."""
    d = _check_dimension(d)
    return math.sqrt(math.pi) * gamma(d / 2) / gamma((d + 1) / 2)


def critical_exponent(d: int) -> float:
    """Sobolev exponent 2* = 2d/(d-2); infinite for d <= 2."""
    d = _check_dimension(d)
    return INF if d <= 2 else 2.0 * d / (d - 2)


def alpha_star(d: int) -> float:
    """Threshold d(d-2)/4, clipped at zero for d <= 2."""
    d = _check_dimension(d)
    return max(0.0, d * (d - 2) / 4.0)


def kappa(q: float, d: int) -> float:
    """kappa_{q,d} = |S^d|^{1-2/q}; ``q = inf`` is accepted for d = 1 only."""
    d = _check_dimension(d)
    if q == INF:
        if d != 1:
            raise DomainError("q = inf is only admissible in dimension d = 1")
        return sphere_surface(d)
    if not q > 0:
        raise DomainError(f"q must be positive, got {q!r}")
    return sphere_surface(d) ** (1.0 - 2.0 / q)


def sobolev_constant_gamma_form(d: int) -> float:
    """S_d = (Gamma(d)/Gamma(d/2))^{2/d} / (pi d (d-2)), from the Aubin-Talenti extremal."""
    d = _check_dimension(d, minimum=3)
    log_ratio = math.lgamma(d) - math.lgamma(d / 2)
    return math.exp(2.0 * log_ratio / d) / (math.pi * d * (d - 2))


def sobolev_constant_sphere_form(d: int) -> float:
    """S_d = 4 / (d (d-2) |S^d|^{2/d}), from the stereographic projection."""
    d = _check_dimension(d, minimum=3)
    return 4.0 / (d * (d - 2) * sphere_surface(d) ** (2.0 / d))


def sobolev_constant(d: int, check: bool = True) -> float:
    """Best constant S_d in ||v||_{2*}^2 <= S_d ||grad v||_2^2 on R^d, d >= 3.

    Evaluated in the Gamma-function form; with ``check`` the sphere-area form is
    evaluated too and a disagreement beyond 1e-12 relative raises.
    """
    value = sobolev_constant_gamma_form(d)
    if check:
        other = sobolev_constant_sphere_form(d)
        if abs(value - other) > 1e-12 * abs(value):
            raise ArithmeticError(f"closed forms of S_{d} disagree: {value!r} vs {other!r}")
    return value


@dataclass(frozen=True)
class ProblemParams:
    """Exponents attached to a pair (d, q), q != 2.

    For q > 2: p = q/(q-2), gamma = p - d/2, theta = d(q-2)/(2q).
    For q < 2: p = q/(2-q), gamma = p + d/2, delta = 2q/(2d - q(d-2)).
    ``theta`` is None on the q < 2 branch and ``delta`` None on the q > 2 branch.
    """

    d: int
    q: float
    p: float
    gamma: float
    theta: Optional[float]
    delta: Optional[float]
    alpha_star: float
    q_critical: float

    @property
    def superquadratic(self) -> bool:
        return self.q > 2

    @property
    def line_threshold(self) -> float:
        """End of the exact-constant branch: d/(q-2) for q > 2, d/(2-q) for q < 2."""
        if self.q == INF:
            return 0.0
        return self.d / abs(self.q - 2)


def exponents(d: int, q: float) -> ProblemParams:
    """Populate :class:`ProblemParams`; the branch follows the sign of q - 2."""
    d = _check_dimension(d)
    if q == INF:
        if d != 1:
            raise DomainError("q = inf is only admissible in dimension d = 1")
        return ProblemParams(d=1, q=INF, p=1.0, gamma=0.5, theta=0.5, delta=None,
                             alpha_star=0.0, q_critical=INF)
    if not q > 0:
        raise DomainError(f"q must be positive, got {q!r}")
    if q == 2:
        raise DomainError("q = 2 has no (p, gamma) parametrisation; use the logarithmic case")
    two_star = critical_exponent(d)
    if q > 2:
        if q > two_star * (1 + 1e-14):
            raise DomainError(f"q = {q} exceeds the critical exponent {two_star} for d = {d}")
        p = q / (q - 2)
        return ProblemParams(d=d, q=q, p=p, gamma=p - d / 2, theta=d * (q - 2) / (2 * q),
                             delta=None, alpha_star=alpha_star(d), q_critical=two_star)
    p = q / (2 - q)
    return ProblemParams(d=d, q=q, p=p, gamma=p + d / 2, theta=None,
                         delta=2 * q / (2 * d - q * (d - 2)), alpha_star=alpha_star(d),
                         q_critical=two_star)


def q_from_p(p: float, branch: str = "negative") -> float:
    """Inverse of the p-parametrisation: 2p/(p-1) for negative potentials, 2p/(p+1) otherwise."""
    if branch == "negative":
        if p == 1:
            return INF
        if not p > 1:
            raise DomainError(f"p must exceed 1 on the negative-potential branch, got {p!r}")
        return 2 * p / (p - 1)
    if branch == "positive":
        if not p > 0:
            raise DomainError(f"p must be positive, got {p!r}")
        return 2 * p / (p + 1)
    raise DomainError(f"unknown branch {branch!r}")
