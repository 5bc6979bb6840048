"""Euclidean Gagliardo-Nirenberg-Sobolev and Keller-Lieb-Thirring constants.

For 2 < q < 2*,

    K_{q,d} = inf (||grad v||^2 + ||v||^2) / ||v||_q^2      on H^1(R^d),

is attained by the radial ground state of w'' + (d-1) w'/r - w + w^{q-1} = 0,
and K_{q,d} = ||w||_q^{q-2}.  For 0 < q < 2,

    K*_{q,d} = inf (||grad v||^2 + ||v||_q^2) / ||v||^2,

is attained (after a dilation) by the compactly supported solution of
phi'' + (d-1) phi'/r + phi - phi^{q-1} = 0.  Both profiles are computed by
bisection shooting on the central value.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.special import roots_legendre

from sphere_bounds.constants import INF, critical_exponent, exponents, sobolev_constant
from sphere_bounds.errors import DomainError, SolverError

OVERSHOOT, UNDERSHOOT = 1, -1


@dataclass(frozen=True)
class ShootingOptions:
    """Tolerances for the radial shooting solver."""

    rtol: float = 1e-13
    r_start: float = 1e-5
    r_limit: float = 5000.0
    decay_tol: float = 1e-10
    residual_tol: float = 1e-7
    # trajectories of the final bracket agree to this (absolute, relative to w(0)) on [0, r_cut]
    split_tol: float = 1e-10
    max_central_value: float = 1e40
    panel_points: int = 8


DEFAULT_SHOOTING = ShootingOptions()


def ball_surface(d: int) -> float:
    """|S^{d-1}|, the area of the unit sphere of R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Radial ground state on [0, r_max].

    ``values``/``slopes`` are sampled on ``r_nodes``.  On [0, r_cut] they come
    from the shooting trajectory; beyond r_cut from the fitted exponential tail
    (q > 2) or are identically zero past the support radius (q < 2).
    """

    r_nodes: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    d: int
    q: float
    central_value: float
    r_cut: float
    kind: str  # "gns" (q > 2) or "dual" (q < 2)
    support_radius: Optional[float] = None
    r_start: float = 0.0
    curvature: float = 0.0
    _trajectory: Callable = field(default=None, repr=False)
    _tail: Callable = field(default=None, repr=False)

    @property
    def r_max(self) -> float:
        return float(self.r_nodes[-1])

    def __call__(self, r):
        """Profile value and slope at radii r (shape (2, len(r)))."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros((2, r.size))
        inner = r <= self.r_cut
        rr = np.maximum(r[inner], self.r_start)
        if np.any(inner):
            ws = self._trajectory(rr)
            # series branch on [0, r_start)
            small = r[inner] < self.r_start
            if np.any(small):
                c = self.curvature
                ws[0, small] = self.central_value + 0.5 * c * r[inner][small] ** 2
                ws[1, small] = c * r[inner][small]
            out[:, inner] = ws
        outer = ~inner
        if np.any(outer) and self._tail is not None:
            out[:, outer] = self._tail(r[outer])
        if self.kind == "dual":
            out[0] = np.maximum(out[0], 0.0)
        return out

    def residual(self, h: Optional[float] = None) -> float:
        """Max of |w'' + (d-1) w'/r -/+ (w - w^{q-1})| on interior nodes, relative to max(1, w(0)^{q-1}).

        w'' is obtained from a fourth-order central difference of the slope;
        the default step resolves the core of width w(0)^{-(q-2)/2}.
        """
        if h is None:
            h = min(2e-3, 0.02 * self.central_value ** (-abs(self.q - 2) / 2))
        r = self.r_nodes
        hi = self.r_cut if self.support_radius is None else self.support_radius
        mask = (r > 4 * h) & (r < hi - 4 * h)
        r = r[mask]
        ws = self(r)
        sp = [self(r + k * h)[1] for k in (-2, -1, 1, 2)]
        wpp = (sp[0] - 8 * sp[1] + 8 * sp[2] - sp[3]) / (12 * h)
        w, wp = ws
        sign = 1.0 if self.kind == "gns" else -1.0
        res = wpp + (self.d - 1) * wp / r - sign * (w - np.abs(w) ** (self.q - 1))
        scale = max(1.0, self.central_value ** (self.q - 1))
        return float(np.max(np.abs(res))) / scale if res.size else 0.0


@dataclass(frozen=True, eq=False)
class GnsResult:
    """Optimal constant with the profile it was computed from.

    ``norms`` holds (||grad w||^2, ||w||^2, ||w||_q^q) over R^d.
    """

    constant: float
    profile: Optional[RadialProfile]
    norms: tuple
    diagnostics: dict


def _check_gns_range(d, q):
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {d!r}")
    if not q > 2:
        raise DomainError(f"ground states need q > 2, got {q!r}")
    if q >= critical_exponent(d):
        raise DomainError(f"q = {q} is not subcritical for d = {d}")


def _shoot(w0, d, q, sign, opts, dense=False):
    """Integrate from the regular centre; classify as overshoot or undershoot."""
    curvature = sign * (w0 - w0 ** (q - 1)) / d
    r0 = opts.r_start
    y0 = [w0 + 0.5 * curvature * r0**2, curvature * r0]
    qm1 = q - 1

    def rhs(r, y):
        w, wp = y
        return [wp, -(d - 1) * wp / r + sign * (w - math.copysign(abs(w) ** qm1, w))]

    def crosses_zero(r, y):
        return y[0]

    crosses_zero.terminal = True
    crosses_zero.direction = -1

    def turns(r, y):
        return y[1]

    turns.terminal = True
    turns.direction = 1
    events = [crosses_zero, turns]

    if sign < 0:
        # E = phi'^2/2 + phi^2/2 - phi^q/q decreases; once negative phi cannot reach 0
        def energy(r, y):
            w, wp = y
            return 0.5 * wp**2 + 0.5 * w**2 - abs(w) ** q / q

        energy.terminal = True
        energy.direction = -1
        if energy(r0, y0) < 0:
            return UNDERSHOOT, None
        events.append(energy)

    sol = solve_ivp(rhs, (r0, opts.r_limit), y0, method="DOP853", rtol=opts.rtol,
                    atol=1e-300 if sign > 0 else 1e-15 * w0, events=events,
                    dense_output=dense)
    if sol.t_events[0].size or sol.y[0, -1] <= 0:
        return OVERSHOOT, sol
    if sign < 0 and sol.status == -1 and sol.y[1, -1] < 0 and energy(sol.t[-1], sol.y[:, -1]) > 0:
        # step size collapsed at the singular point phi = 0, which is reached with phi' < 0
        return OVERSHOOT, sol
    if any(ev.size for ev in sol.t_events[1:]):
        return UNDERSHOOT, sol
    raise SolverError(f"trajectory from w(0) = {w0!r} neither crossed zero nor turned "
                      f"before r = {opts.r_limit}", {"w0": w0, "status": sol.status})


def _bisect_central_value(d, q, sign, opts):
    lo = 1.01
    hi = 2.0
    calls = 0
    while True:
        if hi > opts.max_central_value:
            raise SolverError("no overshooting central value found", {"d": d, "q": q})
        kind, _ = _shoot(hi, d, q, sign, opts)
        calls += 1
        if kind == OVERSHOOT:
            break
        lo, hi = hi, 2 * hi
    kind, _ = _shoot(lo, d, q, sign, opts)
    calls += 1
    if kind != UNDERSHOOT:
        raise SolverError("lower end of the shooting bracket overshoots", {"d": d, "q": q})
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        kind, _ = _shoot(mid, d, q, sign, opts)
        calls += 1
        if kind == OVERSHOOT:
            hi = mid
        else:
            lo = mid
    return lo, hi, calls


def _panel_quadrature(breaks, npts):
    """Gauss-Legendre nodes/weights on consecutive panels [breaks[i], breaks[i+1]]."""
    x, wt = roots_legendre(npts)
    a, b = breaks[:-1], breaks[1:]
    half = 0.5 * (b - a)
    nodes = (half[:, None] * x[None, :] + 0.5 * (a + b)[:, None]).ravel()
    weights = (half[:, None] * wt[None, :]).ravel()
    return nodes, weights


def _build_profile(d, q, sign, opts):
    lo, hi, calls = _bisect_central_value(d, q, sign, opts)
    _, over = _shoot(hi, d, q, sign, opts, dense=True)
    _, under = _shoot(lo, d, q, sign, opts, dense=True)
    w0 = lo
    curvature = sign * (w0 - w0 ** (q - 1)) / d

    if sign > 0:
        # both trajectories follow the ground state until their separation blows up
        t = np.union1d(over.t, under.t)
        t = t[t <= min(over.t[-1], under.t[-1])]
        fine = np.linspace(t[0], t[-1], 20 * t.size)
        gap = np.abs(over.sol(fine)[0] - under.sol(fine)[0])
        bad = np.nonzero(gap > opts.split_tol * w0)[0]
        r_cut = float(fine[bad[0] - 1]) if bad.size else float(fine[-1])
        traj = lambda r: 0.5 * (over.sol(r) + under.sol(r))  # noqa: E731
        w_cut, _ = traj(np.array([r_cut]))[:, 0]
        # w ~ C r^{-(d-1)/2} e^{-r}
        C = w_cut * r_cut ** ((d - 1) / 2) * math.exp(r_cut)
        expo = (d - 1) / 2

        def tail(r):
            w = C * r ** (-expo) * np.exp(-r)
            return np.vstack([w, -w * (1 + expo / r)])

        r_max = r_cut
        while C * r_max ** (-expo) * math.exp(-r_max) > opts.decay_tol:
            r_max += 1.0
        breaks = np.union1d(over.t[over.t <= r_cut], [0.0, r_cut])
        support = None
    else:
        # overshoot trajectory touches down where phi = phi' = 0 in the limit
        support = float(over.t_events[0][0] if over.t_events[0].size else over.t[-1])
        traj = over.sol
        r_cut = support
        r_max = support
        tail = lambda r: np.zeros((2, np.size(r)))  # noqa: E731
        breaks = np.union1d(over.t[over.t <= support], [0.0, support])

    # refine panels so that none is longer than 1/8
    pieces = [np.linspace(a, b, max(2, int(math.ceil((b - a) * 8)) + 1))
              for a, b in zip(breaks[:-1], breaks[1:])]
    breaks = np.unique(np.concatenate(pieces))
    nodes, weights = _panel_quadrature(breaks, opts.panel_points)
    profile = RadialProfile(
        r_nodes=np.array([]), values=np.array([]), slopes=np.array([]), d=d, q=q,
        central_value=w0, r_cut=r_cut, kind="gns" if sign > 0 else "dual",
        support_radius=support, r_start=opts.r_start, curvature=curvature,
        _trajectory=traj, _tail=tail,
    )

    r_nodes = np.union1d(breaks, np.arange(math.ceil(r_cut), math.ceil(r_max) + 1, 0.5))
    r_nodes = r_nodes[r_nodes <= max(r_max, r_cut)]
    sampled = profile(r_nodes)
    object.__setattr__(profile, "r_nodes", r_nodes)
    object.__setattr__(profile, "values", sampled[0])
    object.__setattr__(profile, "slopes", sampled[1])

    w, wp = profile(nodes)
    jac = weights * nodes ** (d - 1)
    grad2 = float(jac @ wp**2)
    mass2 = float(jac @ w**2)
    massq = float(jac @ np.abs(w) ** q)
    if sign > 0:
        # analytic tail corrections from w ~ C r^{-(d-1)/2} e^{-r}
        tail_mass = C**2 * math.exp(-2 * r_cut) / 2
        grad2 += tail_mass
        mass2 += tail_mass
        massq += quad(lambda r: (C * r ** (-expo) * math.exp(-r)) ** q * r ** (d - 1),
                      r_cut, np.inf)[0]
    area = ball_surface(d)
    norms = (area * grad2, area * mass2, area * massq)
    diagnostics = {"shooting_calls": calls, "bracket": (lo, hi), "r_cut": r_cut,
                   "quadrature_nodes": nodes.size}
    return profile, norms, diagnostics


@functools.lru_cache(maxsize=128)
def _ground_state_cached(d, q, opts):
    return _build_profile(d, q, 1.0, opts)


def ground_state_radial(d: int, q: float, opts: ShootingOptions = DEFAULT_SHOOTING) -> RadialProfile:
    """Positive decreasing solution of w'' + (d-1) w'/r - w + w^{q-1} = 0, w'(0) = 0, w(inf) = 0."""
    _check_gns_range(d, q)
    profile, _, _ = _ground_state_cached(int(d), float(q), opts)
    return profile


def gns_constant(q: float, d: int, opts: ShootingOptions = DEFAULT_SHOOTING) -> GnsResult:
    """K_{q,d}.  q = 2* returns 1/S_d and (q = inf, d = 1) returns 2; no profile in those cases.

    The value at q = 2* is the limit of K_{q,d}, i.e. the Sobolev constant in the
    normalisation K ||v||_{2*}^2 <= ||grad v||^2, which is 1/S_d.
    """
    if q == INF:
        if d != 1:
            raise DomainError("q = inf is only admissible in dimension d = 1")
        return GnsResult(2.0, None, (), {"closed_form": "Agmon"})
    if d >= 3 and abs(q - critical_exponent(d)) <= 1e-14 * q:
        return GnsResult(1.0 / sobolev_constant(d), None, (), {"closed_form": "Sobolev"})
    _check_gns_range(d, q)
    profile, norms, diag = _ground_state_cached(int(d), float(q), opts)
    grad2, mass2, massq = norms
    constant = massq ** ((q - 2) / q)
    quotient = (grad2 + mass2) / massq ** (2 / q)
    diag = dict(diag, quotient=quotient, energy_defect=(grad2 + mass2) / massq - 1,
                pohozaev_defect=((d - 2) * grad2 + d * mass2) / (2 * d * massq / q) - 1)
    return GnsResult(constant, profile, norms, diag)


def scaling_prefactor(theta: float) -> float:
    """theta^{-theta} (1 - theta)^{-(1 - theta)}, continuous at theta = 1."""
    if not 0 < theta <= 1:
        raise DomainError(f"theta must lie in (0, 1], got {theta!r}")
    if theta == 1:
        return 1.0
    return theta ** (-theta) * (1 - theta) ** (-(1 - theta))


def gns_scaling_reduce(K_GN: float, q: float, d: int) -> float:
    """K_{q,d} from the scale-invariant constant K_GN(q) = inf |grad u|^{2t} |u|^{2(1-t)} / |u|_q^2."""
    theta = d * (q - 2) / (2 * q)
    if not 0 < theta < 1:
        raise DomainError(f"theta = {theta} outside (0, 1) for q = {q}, d = {d}")
    return scaling_prefactor(theta) * K_GN


def scale_invariant_quotient(norms, q, d) -> float:
    """|grad v|^{2 theta} |v|^{2(1-theta)} / |v|_q^2 from (|grad v|^2, |v|^2, |v|_q^q)."""
    grad2, mass2, massq = norms
    theta = d * (q - 2) / (2 * q)
    return grad2**theta * mass2 ** (1 - theta) / massq ** (2 / q)


def optimal_dilation(norms, q, d) -> float:
    """lambda* = sqrt(theta / (1 - theta)) |v| / |grad v| minimising N[lambda^{d/q} v(lambda x)]."""
    grad2, mass2, _ = norms
    theta = d * (q - 2) / (2 * q)
    return math.sqrt(theta / (1 - theta)) * math.sqrt(mass2 / grad2)


@functools.lru_cache(maxsize=128)
def _dual_cached(d, q, opts):
    return _build_profile(d, q, -1.0, opts)


def dual_profile(d: int, q: float, opts: ShootingOptions = DEFAULT_SHOOTING) -> RadialProfile:
    """Compactly supported solution of phi'' + (d-1) phi'/r + phi - phi^{q-1} = 0."""
    if not 0 < q < 2:
        raise DomainError(f"dual profiles need 0 < q < 2, got {q!r}")
    profile, _, _ = _dual_cached(int(d), float(q), opts)
    return profile


def dual_quotient_on_dilations(norms, q, d):
    """Minimise R[v(lambda x)] over lambda; returns (min value, lambda*, derivative at lambda*).

    R[v_lambda] = lambda^2 G + lambda^{-s} H with G = |grad v|^2/|v|^2,
    H = |v|_q^2/|v|^2 and s = d(2 - q)/q.
    """
    grad2, mass2, massq = norms
    G = grad2 / mass2
    H = massq ** (2 / q) / mass2
    s = d * (2 - q) / q
    lam = (s * H / (2 * G)) ** (1 / (s + 2))
    value = lam**2 * G + lam ** (-s) * H
    slope = 2 * lam * G - s * lam ** (-s - 1) * H
    return value, lam, slope


def dual_gns_constant(q: float, d: int, opts: ShootingOptions = DEFAULT_SHOOTING) -> GnsResult:
    """K*_{q,d} = inf (||grad v||^2 + ||v||_q^2) / ||v||^2 for 0 < q < 2.

    The minimiser is a dilation of the compactly supported profile; the
    returned ``norms`` and ``profile`` refer to the undilated solution and
    ``diagnostics['dilation']`` is the stationary scale.
    """
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {d!r}")
    if not 0 < q < 2:
        raise DomainError(f"dual constant needs 0 < q < 2, got {q!r}")
    profile, norms, diag = _dual_cached(int(d), float(q), opts)
    value, lam, slope = dual_quotient_on_dilations(norms, q, d)
    grad2, mass2, massq = norms
    # Euler-Lagrange scaling: K* = b^2 with b^{2 + d(2-q)/q} = |phi|_q^{2-q}
    el_value = massq ** ((2 - q) / q * 2 / (2 + d * (2 - q) / q))
    diag = dict(diag, dilation=lam, dilation_slope=slope, euler_lagrange_value=el_value,
                energy_defect=(grad2 + massq) / mass2 - 1)
    if not abs(el_value - value) <= 1e-6 * value:
        raise SolverError("dilation and Euler-Lagrange values of K* disagree", diag)
    return GnsResult(value, profile, norms, diag)


def klt_constants(gamma: float, d: int, branch: str = "negative",
                  opts: ShootingOptions = DEFAULT_SHOOTING) -> float:
    """One-bound-state Keller-Lieb-Thirring constant.

    ``branch='negative'``: L^1_{gamma,d} = K_{q,d}^{-p}, p = gamma + d/2.
    ``branch='positive'``: L^1_{-gamma,d} = (K*_{q,d})^{-gamma}, gamma > d/2.
    """
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {d!r}")
    if branch == "negative":
        admissible = gamma >= 0 if d >= 3 else (gamma > 0 if d == 2 else gamma >= 0.5)
        if not admissible:
            raise DomainError(f"gamma = {gamma} not admissible for d = {d}")
        p = gamma + d / 2
        if d == 1 and gamma == 0.5:
            q = INF
        else:
            q = 2 * (2 * gamma + d) / (2 * gamma + d - 2)
        K = gns_constant(q, d, opts).constant
        return K ** (-p)
    if branch == "positive":
        if not gamma > d / 2:
            raise DomainError(f"gamma must exceed d/2 = {d / 2}, got {gamma!r}")
        q = 2 * (2 * gamma - d) / (2 * gamma - d + 2)
        Kstar = dual_gns_constant(q, d, opts).constant
        return Kstar ** (-gamma)
    raise DomainError(f"unknown branch {branch!r}")


def agmon_quotient(u, x) -> float:
    """(||u||^2 + ||u'||^2) / ||u||_inf^2 for samples u on a uniform 1-D grid x."""
    u = np.asarray(u, dtype=float)
    h = x[1] - x[0]
    du = np.gradient(u, h, edge_order=2)
    mass = np.trapezoid(u**2, x)
    grad = np.trapezoid(du**2, x)
    return (mass + grad) / np.max(np.abs(u)) ** 2


def klt_rayleigh_ratio(v, phi, r, d, p) -> float:
    """R[v, phi] = int (phi v^2 - |grad v|^2) / (||v||^2 ||phi||_p^{2p/(2p-d)}) for radial samples.

    ``v``, ``phi`` are nodal values on the radial grid ``r``; integrals use the
    trapezoid rule with weight r^{d-1}.
    """
    v = np.asarray(v, dtype=float)
    phi = np.asarray(phi, dtype=float)
    jac = ball_surface(d) * r ** (d - 1)
    dv = np.gradient(v, r, edge_order=2)
    num = np.trapezoid((phi * v**2 - dv**2) * jac, r)
    mass = np.trapezoid(v**2 * jac, r)
    phi_p = np.trapezoid(np.abs(phi) ** p * jac, r) ** (1 / p)
    return num / (mass * phi_p ** (2 * p / (2 * p - d)))
