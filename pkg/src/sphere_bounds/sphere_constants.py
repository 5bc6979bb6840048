"""Optimal interpolation constants on S^d, computed on zonal functions.

    mu(alpha): min (||grad u||^2 + alpha ||u||^2) / ||u||_q^2,        2 < q <= 2*
    nu(beta):  min (||grad u||^2 + beta ||u||_q^2) / ||u||^2,          0 < q < 2
    xi(alpha): alpha exp(J/p), J = min p log(1 + ||grad u||^2/alpha) - int u^2 log u^2,  ||u|| = 1

All norms are taken with respect to the uniform probability measure.  Minimisers
are searched for among functions of the height z only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh, solve
from scipy.optimize import brentq, minimize_scalar

from sphere_bounds.constants import (INF, alpha_star, critical_exponent, exponents, kappa,
                                     sphere_surface)
from sphere_bounds.errors import DomainError, SolverError
from sphere_bounds.ultraspherical import JacobiGrid, ZonalFunction, build_grid

EXACT_LINE = "exact_line"
CRITICAL_PLATEAU = "critical_plateau"
MINIMIZED = "minimized"
CLOSED_FORM = "closed_form"
THRESHOLD_RTOL = 1e-12


@dataclass(frozen=True)
class SolverOptions:
    """Settings shared by the minimisations of this module."""

    N: int = 128
    max_iter: int = 20000
    stagnation_tol: float = 1e-10
    stagnation_window: int = 50
    seeds: tuple = (0.1, 0.3, 0.6)
    newton: bool = True
    refine: bool = True
    layer_nodes: int = 8
    max_N: int = 1024
    residual_tol: float = 1e-6
    # at q = 2* also run the (non-attaining) minimisation and report it in diagnostics
    plateau_raw: bool = False


DEFAULT_OPTIONS = SolverOptions()


@dataclass(frozen=True, eq=False)
class ConstantResult:
    """Value of mu, nu or xi with the branch it came from."""

    value: float
    branch: str
    minimizer: Optional[ZonalFunction] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True, eq=False)
class CurveSample:
    """A sampled constant curve with its bounds and asymptote.

    ``lower``/``upper``/``asymptote`` hold NaN where not defined.
    """

    parameter: np.ndarray
    value: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    asymptote: np.ndarray
    branch: tuple
    metadata: dict


# ---------------------------------------------------------------------------
# generic descent


def _descend(u, value, gradient, precondition, project, opts):
    """Preconditioned projected gradient descent with Armijo backtracking.

    ``gradient(u)`` is the Euclidean gradient in nodal coordinates and
    ``precondition(g)`` returns the search direction's negative.
    """
    u = project(u)
    val = value(u)
    history = [val]
    it = 0
    for it in range(1, opts.max_iter + 1):
        g = gradient(u)
        s = -precondition(g)
        slope = float(g @ s)
        if not slope < 0:
            break
        tau = 1.0
        while True:
            trial = project(u + tau * s)
            new = value(trial)
            if new <= val + 1e-4 * tau * slope:
                break
            tau *= 0.5
            if tau < 1e-12:
                trial, new = u, val
                break
        u, val = trial, new
        history.append(val)
        if tau < 1e-12:
            break
        w = opts.stagnation_window
        if len(history) > w and history[-w - 1] - val < opts.stagnation_tol * abs(val):
            break
    return u, val, it


def _newton_done(residual, previous):
    """Stop once the residual is small and has hit its rounding floor."""
    return residual <= 1e-15 or (residual <= 1e-10 and residual > 0.5 * previous)


def _participation_layer(grid, u):
    """Number of nodes in the cap around the maximum carrying the participation measure of u."""
    w = grid.weights
    u2 = u**2
    ratio = (w @ u2) ** 2 / (w @ u2**2)
    order = np.argsort(-np.abs(u))
    return int(np.searchsorted(np.cumsum(w[order]), ratio)), float(ratio)


def _spectral_tail(grid, u):
    """Size of the top 10% Jacobi coefficients relative to the largest one."""
    c = np.abs(grid.project_polynomial(u))
    k = max(1, grid.N // 10)
    return float(c[-k:].max() / c.max())


def _needs_refinement(grid, u, opts):
    layer, _ = _participation_layer(grid, u)
    return layer < opts.layer_nodes or _spectral_tail(grid, u) > 1e-8


def _transfer(initial, grid):
    """Nodal values of ``initial`` (ZonalFunction or array) on ``grid``."""
    if isinstance(initial, ZonalFunction):
        if initial.grid is grid:
            return initial.values.copy()
        return initial.grid.interpolate(initial.values, grid.nodes)
    values = np.asarray(initial, dtype=float)
    if values.shape != grid.nodes.shape:
        raise DomainError("initial guess does not match the grid")
    return values.copy()


# ---------------------------------------------------------------------------
# mu


def _check_mu_range(alpha, d, q):
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {d!r}")
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    if q == INF:
        if d != 1:
            raise DomainError("q = inf is only admissible in dimension d = 1")
        return
    if not q > 2:
        raise DomainError(f"mu needs q > 2, got {q!r}")
    if q > critical_exponent(d) * (1 + 1e-14):
        raise DomainError(f"q = {q} exceeds the critical exponent for d = {d}")


def on_exact_line(x, threshold):
    """x <= threshold up to a relative rounding allowance, so thresholds survive round trips."""
    return x <= threshold * (1 + THRESHOLD_RTOL)


def _is_critical(d, q):
    return d >= 3 and abs(q - critical_exponent(d)) <= 1e-14 * q


def mu_quotient(grid: JacobiGrid, u, alpha: float, q: float) -> float:
    """(u^T K u + alpha u^T W u) / (sum w |u|^q)^{2/q} on nodal values."""
    w = grid.weights
    return (grid.dirichlet(u) + alpha * (w @ u**2)) / (w @ np.abs(u) ** q) ** (2 / q)


def _mu_descent(grid, alpha, q, u0, opts):
    w = grid.weights
    Ka = np.array(grid.stiffness)
    Ka[np.diag_indices_from(Ka)] += alpha * w
    factor = cho_factor(Ka)

    def value(u):
        return (u @ Ka @ u) / (w @ np.abs(u) ** q) ** (2 / q)

    def gradient(u):
        # at ||u||_q = 1
        return 2 * (Ka @ u - value(u) * w * np.abs(u) ** (q - 2) * u)

    def precondition(g):
        return 0.5 * cho_solve(factor, g)

    def project(u):
        return u / (w @ np.abs(u) ** q) ** (1 / q)

    return _descend(u0, value, gradient, precondition, project, opts) + (Ka,)


def _mu_newton(grid, Ka, u, value, q, maxit=60):
    """Solve K_alpha f = W |f|^{q-2} f from f = value^{1/(q-2)} u; returns normalised u or None."""
    w = grid.weights
    f = value ** (1 / (q - 2)) * u
    scale = np.abs(Ka @ f).max()
    previous = np.inf
    for _ in range(maxit):
        F = Ka @ f - w * np.abs(f) ** (q - 2) * f
        res = np.abs(F).max() / scale
        if _newton_done(res, previous):
            break
        previous = res
        J = Ka - np.diag((q - 1) * w * np.abs(f) ** (q - 2))
        try:
            f = f - solve(J, F, assume_a="sym")
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(f)):
            return None
    else:
        return None
    return f / (w @ np.abs(f) ** q) ** (1 / q)


def mu_euler_lagrange_residual(grid: JacobiGrid, u, alpha: float, q: float, value: float) -> float:
    """max |(-Delta u + alpha u - mu |u|^{q-2} u)(z_i)| / max |mu u^{q-1}| at the nodes, ||u||_q = 1."""
    w = grid.weights
    lhs = (grid.stiffness @ u) / w + alpha * u
    rhs = value * np.abs(u) ** (q - 2) * u
    return float(np.abs(lhs - rhs).max() / np.abs(rhs).max())


def _mu_seeds(grid, alpha, d, q, opts):
    z = grid.nodes
    seeds = [1 + eps * z for eps in opts.seeds]
    if alpha > 10 * d / (q - 2):
        seeds.append(np.exp(-alpha * (1 - z) / 4))
    return seeds


def minimize_mu_quotient(alpha: float, d: int, q: float, opts: SolverOptions = DEFAULT_OPTIONS,
                         initial=None):
    """Numerical minimum of the mu-quotient over zonal functions, with grid refinement.

    Returns (value, minimiser as ZonalFunction normalised by ||u||_q = 1, diagnostics).
    """
    N = opts.N
    history = []
    refined = None
    while True:
        grid = build_grid(d, N)
        if refined is not None:
            starts = [_transfer(refined, grid)]
        else:
            starts = _mu_seeds(grid, alpha, d, q, opts)
            if initial is not None:
                starts.insert(0, _transfer(initial, grid))
        best = None
        for u0 in starts:
            u, val, its, Ka = _mu_descent(grid, alpha, q, u0, opts)
            if best is None or val < best[1]:
                best = (u, val, its)
        u, val, its = best
        polished = False
        if opts.newton:
            un = _mu_newton(grid, Ka, u, val, q)
            if un is not None:
                vn = mu_quotient(grid, un, alpha, q)
                if vn <= val * (1 + 1e-9):
                    u, val, polished = un, vn, True
        history.append((N, val))
        if not (opts.refine and N < opts.max_N and _needs_refinement(grid, u, opts)):
            break
        refined = ZonalFunction(grid, u)
        N *= 2
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    residual = mu_euler_lagrange_residual(grid, u, alpha, q, val)
    layer, ratio = _participation_layer(grid, u)
    diagnostics = {"iterations": its, "newton": polished, "N": grid.N, "el_residual": residual,
                   "layer_nodes": layer, "participation_ratio": ratio, "refinement": history}
    return val, ZonalFunction(grid, u), diagnostics


def mu(alpha: float, d: int, q: float, opts: SolverOptions = DEFAULT_OPTIONS, *,
       force_minimize: bool = False, initial=None) -> ConstantResult:
    """Optimal constant mu(alpha) in ||grad u||^2 + alpha ||u||^2 >= mu ||u||_q^2.

    ``force_minimize`` bypasses the exact branches and returns the numerical
    minimum, which is how the rigidity statement mu = alpha is checked.
    """
    _check_mu_range(alpha, d, q)
    d = int(d)
    if q == INF:
        # d = 1: the minimiser for fixed max is cosh(sqrt(alpha)(|x| - pi)) on the circle
        s = math.sqrt(alpha)
        return ConstantResult(s * math.tanh(math.pi * s) / math.pi, CLOSED_FORM)
    threshold = d / (q - 2)
    if not force_minimize:
        if on_exact_line(alpha, threshold):
            return ConstantResult(float(alpha), EXACT_LINE)
        if _is_critical(d, q):
            diagnostics = {}
            if opts.plateau_raw:
                raw, _, diag = minimize_mu_quotient(alpha, d, q, replace(opts, refine=False))
                diagnostics = {"raw_minimum": raw, "N": diag["N"]}
            return ConstantResult(alpha_star(d), CRITICAL_PLATEAU, None, diagnostics)
    value, u, diagnostics = minimize_mu_quotient(alpha, d, q, opts, initial)
    if diagnostics["el_residual"] > opts.residual_tol and not _is_critical(d, q):
        raise SolverError("Euler-Lagrange residual above tolerance", diagnostics)
    return ConstantResult(value, MINIMIZED, u, diagnostics)


def _theta(s, q, d):
    return s * (q - 2) / (q * (s - 2))


def mu_lower(alpha: float, d: int, q: float, s="best") -> float:
    """Lower bound (d/(s-2))^theta alpha^{1-theta}, theta = s(q-2)/(q(s-2)), q < s <= 2*.

    ``s='best'`` maximises over s and returns alpha on the exact line.
    """
    _check_mu_range(alpha, d, q)
    if q == INF:
        raise DomainError("no interpolation bound for q = inf")
    two_star = critical_exponent(d)
    if s != "best":
        if not q < s <= two_star:
            raise DomainError(f"s must lie in (q, 2*] = ({q}, {two_star}], got {s!r}")
        if s == INF:
            raise DomainError("s must be finite")
        base = d / (s - 2)
        if not alpha > base:
            raise DomainError(f"alpha = {alpha} not above d/(s-2) = {base}")
        theta = _theta(s, q, d)
        return base**theta * alpha ** (1 - theta)
    if on_exact_line(alpha, d / (q - 2)):
        return float(alpha)

    def neg_log_bound(s):
        theta = _theta(s, q, d)
        return -(theta * math.log(d / (s - 2)) + (1 - theta) * math.log(alpha))

    lo = max(q, 2 + d / alpha) * (1 + 1e-12)
    if two_star < INF:
        candidates = np.linspace(lo, two_star, 201)
    else:
        candidates = lo * np.geomspace(1, 1e4, 201)
    vals = [neg_log_bound(s) for s in candidates]
    k = int(np.argmin(vals))
    a, b = candidates[max(k - 1, 0)], candidates[min(k + 1, candidates.size - 1)]
    best = min(vals[k], neg_log_bound(two_star) if two_star < INF else INF)
    if b > a:
        res = minimize_scalar(neg_log_bound, bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12 * b})
        best = min(best, res.fun)
    return math.exp(-best)


def mu_upper_profile(alpha: float, d: int, q: float, eps, N: int = 256):
    """h_alpha(eps) = (alpha + (d + alpha) eps^2 m_2) / (int |1 + eps z|^q dnu_d)^{2/q}, m_2 = 1/(d+1)."""
    grid = build_grid(d, N)
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    m2 = 1.0 / (d + 1)
    powers = np.abs(1 + eps[:, None] * grid.nodes[None, :]) ** q @ grid.weights
    return (alpha + (d + alpha) * eps**2 * m2) / powers ** (2 / q)


def mu_upper(alpha: float, d: int, q: float, N: int = 256) -> float:
    """mu_+(alpha) = inf over eps in [0, 1) of h_alpha(eps), by golden section."""
    _check_mu_range(alpha, d, q)
    if q == INF or _is_critical(d, q):
        raise DomainError("mu_upper needs 2 < q < 2*")
    if on_exact_line(alpha, d / (q - 2)):
        return float(alpha)
    h = lambda e: float(mu_upper_profile(alpha, d, q, e, N)[0])  # noqa: E731
    # golden section on a bracket located on a coarse grid
    grid = np.linspace(0.0, 1 - 1e-9, 101)
    vals = mu_upper_profile(alpha, d, q, grid, N)
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    g = (math.sqrt(5) - 1) / 2
    c, e = b - g * (b - a), a + g * (b - a)
    hc, he = h(c), h(e)
    while b - a > 1e-10:
        if hc < he:
            b, e, he = e, c, hc
            c = b - g * (b - a)
            hc = h(c)
        else:
            a, c, hc = c, e, he
            e = a + g * (b - a)
            he = h(e)
    return min(hc, he, float(vals[k]))


def mu_asymptotic(alpha: float, d: int, q: float) -> float:
    """(K_{q,d} / kappa_{q,d}) alpha^{1 - theta}, theta = d(q-2)/(2q)."""
    from sphere_bounds.euclidean import gns_constant

    _check_mu_range(alpha, d, q)
    params = exponents(d, q)
    return gns_constant(q, d).constant / kappa(q, d) * alpha ** (1 - params.theta)


def alpha_of_mu(mu_val: float, d: int, q: float, opts: SolverOptions = DEFAULT_OPTIONS,
                rtol: float = 1e-11) -> float:
    """Inverse alpha(mu) of the concave increasing map alpha -> mu(alpha)."""
    if not mu_val > 0:
        raise DomainError(f"mu must be positive, got {mu_val!r}")
    if q == INF:
        if d != 1:
            raise DomainError("q = inf is only admissible in dimension d = 1")
        # k tanh(k pi) = pi mu, alpha = k^2
        target = math.pi * mu_val
        k = brentq(lambda k: k * math.tanh(k * math.pi) - target, 0.0, target + 1.0,
                   xtol=1e-15, rtol=1e-15)
        return k * k
    _check_mu_range(mu_val, d, q)
    if on_exact_line(mu_val, d / (q - 2)):
        return float(mu_val)
    if _is_critical(d, q):
        raise DomainError(f"mu = {mu_val} is at or above the plateau alpha_* = {alpha_star(d)}")

    last = {}

    def gap(alpha):
        res = mu(alpha, d, q, opts, initial=last.get("u"))
        last["u"] = res.minimizer
        return res.value - mu_val

    lo = max(float(mu_val), d / (q - 2))
    # mu is concave: doubling finds the bracket with few evaluations
    hi = 2 * lo
    while gap(hi) < 0:
        lo, hi = hi, 2 * hi
        if hi > 1e8:
            raise SolverError("no bracket for alpha(mu)", {"mu": mu_val})
    last.pop("u", None)
    return brentq(gap, lo, hi, xtol=1e-14, rtol=rtol)


def alpha_bounds_d1(mu_val: float):
    """(mu, mu + pi^2 mu^2): bounds on alpha(mu) when d = p = 1."""
    if not mu_val > 0:
        raise DomainError(f"mu must be positive, got {mu_val!r}")
    return float(mu_val), mu_val + math.pi**2 * mu_val**2


# ---------------------------------------------------------------------------
# nu


def nu_quotient(grid: JacobiGrid, u, beta: float, q: float) -> float:
    w = grid.weights
    return (grid.dirichlet(u) + beta * (w @ np.abs(u) ** q) ** (2 / q)) / (w @ u**2)


def nu_optimal_potential(grid: JacobiGrid, u, beta: float, q: float, cap: float = 1e8):
    """W = beta ||u||_q^{2-q} u^{q-2}, the potential with ||W^{-1}||_p^{-1} = beta saturating
    Hoelder's inequality int W u^2 >= beta ||u||_q^2; capped at ``cap`` times beta ||u||_q^{2-q}."""
    w = grid.weights
    S = (w @ np.abs(u) ** q) ** ((2 - q) / q)
    floor = (1.0 / cap) ** (1 / (2 - q))
    return beta * S * np.maximum(np.abs(u), floor) ** (q - 2)


def _nu_self_consistent(grid, beta, q, u0, opts):
    """Alternate u -> W(u) -> ground state of -Delta + W; the quotient does not increase."""
    w = grid.weights
    K = grid.stiffness
    M = np.diag(w)
    u = np.abs(u0) / math.sqrt(w @ u0**2)
    val = nu_quotient(grid, u, beta, q)
    best = (u, val)
    history = [val]
    it = 0
    for it in range(1, opts.max_iter + 1):
        W = nu_optimal_potential(grid, u, beta, q)
        A = np.array(K)
        A[np.diag_indices_from(A)] += w * W
        _, vec = eigh(A, M, subset_by_index=[0, 0])
        u = np.abs(vec[:, 0])
        u /= math.sqrt(w @ u**2)
        val = nu_quotient(grid, u, beta, q)
        if val < best[1]:
            best = (u, val)
        history.append(val)
        window = opts.stagnation_window
        if len(history) > window and abs(history[-window - 1] - val) < 1e-3 * opts.stagnation_tol * val:
            break
    return best[0], best[1], it


def nu(beta: float, d: int, q: float, opts: SolverOptions = DEFAULT_OPTIONS, *,
       force_minimize: bool = False) -> ConstantResult:
    """Optimal constant nu(beta) in ||grad u||^2 + beta ||u||_q^2 >= nu ||u||^2, 0 < q < 2.

    Minimisers may vanish on a cap (dead core), so the minimisation alternates
    between the optimal potential of the current iterate and the ground state
    of -Delta + W instead of using Newton steps.
    """
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {d!r}")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    if not 0 < q < 2:
        raise DomainError(f"nu needs 0 < q < 2, got {q!r}")
    d = int(d)
    if not force_minimize and q >= 1 and on_exact_line(beta, d / (2 - q)):
        return ConstantResult(float(beta), EXACT_LINE)
    N = opts.N
    refined = None
    history = []
    while True:
        grid = build_grid(d, N)
        z = grid.nodes
        if refined is not None:
            starts = [_transfer(refined, grid)]
        else:
            starts = [1 + eps * z for eps in opts.seeds]
            starts.append(np.exp(-beta * (1 - z) / 4))
        best = None
        for u0 in starts:
            u, val, its = _nu_self_consistent(grid, beta, q, u0, opts)
            if best is None or val < best[1]:
                best = (u, val, its)
        u, val, its = best
        history.append((N, val))
        layer, _ = _participation_layer(grid, u)
        if not (opts.refine and N < opts.max_N and layer < opts.layer_nodes):
            break
        refined = ZonalFunction(grid, u)
        N *= 2
    diagnostics = {"iterations": its, "N": grid.N, "refinement": history,
                   "support_fraction": float(grid.weights @ (u > 1e-8 * u.max()))}
    return ConstantResult(val, MINIMIZED, ZonalFunction(grid, u), diagnostics)


def nu_asymptotic(beta: float, d: int, q: float) -> float:
    """K*_{q,d} (kappa_{q,d} beta)^delta, delta = 2q/(2d - q(d-2))."""
    from sphere_bounds.euclidean import dual_gns_constant

    params = exponents(d, q)
    if q >= 2:
        raise DomainError(f"nu needs q < 2, got {q!r}")
    return dual_gns_constant(q, d).constant * (kappa(q, d) * beta) ** params.delta


# ---------------------------------------------------------------------------
# xi


def _entropy(w, u):
    """int u^2 log u^2 with the convention 0 log 0 = 0."""
    u2 = u**2
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(w @ np.where(u2 > 0, u2 * np.log(u2), 0.0))


def xi_functional(grid: JacobiGrid, u, alpha: float, p: float) -> float:
    """p log(1 + D(u)/alpha) - int u^2 log u^2 for u normalised in L^2."""
    w = grid.weights
    u = u / math.sqrt(w @ u**2)
    return p * math.log1p(grid.dirichlet(u) / alpha) - _entropy(w, u)


def _xi_descent(grid, alpha, p, u0, opts):
    w = grid.weights
    K = grid.stiffness

    def value(u):
        return xi_functional(grid, u, alpha, p)

    def gradient(u):
        # gradient of the 0-homogeneous extension at ||u|| = 1
        D = grid.dirichlet(u)
        u2 = u**2
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(u2 > 0, np.log(u2), 0.0)
        g = 2 * p * (K @ u) / (alpha + D) - 2 * w * u * (logs + 1)
        return g - (u @ g) * w * u

    def precondition(g):
        D = max(0.0, float(precondition.D))
        P = (p / (alpha + D)) * K + np.diag(w)
        return 0.5 * solve(P, g, assume_a="pos")

    precondition.D = 0.0

    def project(u):
        u = np.abs(u)
        u = u / math.sqrt(w @ u**2)
        precondition.D = grid.dirichlet(u)
        return u

    return _descend(u0, value, gradient, precondition, project, opts)


def _xi_newton(grid, u, alpha, p, maxit=60):
    """Newton on (p/(alpha + D)) K u - W u (log u^2 + 1) = lam W u, sum w u^2 = 1."""
    if u.min() <= 1e-120:
        return None
    w = grid.weights
    K = grid.stiffness
    n = u.size
    D = grid.dirichlet(u)
    lam = p * D / (alpha + D) - _entropy(w, u) - 1
    previous = np.inf
    for _ in range(maxit):
        D = grid.dirichlet(u)
        a = p / (alpha + D)
        Ku = K @ u
        logs = np.log(u**2)
        F = np.concatenate([a * Ku - w * u * (logs + 1) - lam * w * u, [w @ u**2 - 1]])
        res = np.abs(F).max() / max(1.0, np.abs(a * Ku).max())
        if _newton_done(res, previous):
            break
        previous = res
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = a * K - np.diag(w * (logs + 3 + lam))
        J[:n, :n] -= (2 * p / (alpha + D) ** 2) * np.outer(Ku, Ku)
        J[:n, n] = -w * u
        J[n, :n] = 2 * w * u
        try:
            step = solve(J, F)
        except np.linalg.LinAlgError:
            return None
        u = u - step[:n]
        lam = lam - step[n]
        if not np.all(np.isfinite(u)) or u.min() <= 0:
            return None
    else:
        return None
    return u


def xi(alpha: float, d: int, p: float, opts: SolverOptions = DEFAULT_OPTIONS, *,
       force_minimize: bool = False) -> ConstantResult:
    """Log-Sobolev type constant xi(alpha) = alpha exp(J_min/p), p > max(1, d/2).

    The constant function gives J = 0, so xi <= alpha; below d(p-1)/2 the
    constant is optimal and the value alpha is returned on the exact line.
    """
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {d!r}")
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    if not p > max(1.0, d / 2):
        raise DomainError(f"p must exceed max(1, d/2), got {p!r}")
    d = int(d)
    if not force_minimize and on_exact_line(alpha, d * (p - 1) / 2):
        return ConstantResult(float(alpha), EXACT_LINE)
    N = opts.N
    initial = None
    while True:
        grid = build_grid(d, N)
        z = grid.nodes
        if initial is not None:
            starts = [initial.grid.interpolate(initial.values, z)]
        else:
            starts = [1 + eps * z for eps in opts.seeds]
            # Gaussian concentration profile with variance (2p - d)/(4 alpha)
            starts.append(np.exp(-2 * alpha * (1 - z) / (2 * p - d)))
        best = None
        for u0 in starts:
            u, val, its = _xi_descent(grid, alpha, p, u0, opts)
            if best is None or val < best[1]:
                best = (u, val, its)
        u, val, its = best
        polished = False
        if opts.newton and val < -1e-12:
            un = _xi_newton(grid, u, alpha, p)
            if un is not None:
                vn = xi_functional(grid, un, alpha, p)
                if vn <= val + 1e-12 * abs(val):
                    u, val, polished = un, vn, True
        if not (opts.refine and N < opts.max_N and _needs_refinement(grid, u, opts)):
            break
        initial = ZonalFunction(grid, u)
        N *= 2
    J = min(val, 0.0)
    diagnostics = {"iterations": its, "newton": polished, "N": grid.N, "J": val}
    return ConstantResult(alpha * math.exp(J / p), MINIMIZED, ZonalFunction(grid, u), diagnostics)


def xi_asymptotic(alpha: float, d: int, p: float) -> float:
    """Large-alpha value of xi from Gaussian concentration at a point.

    With u^2 |S^d|^{-1} a centred Gaussian density of variance t per direction,
    J = p log(1 + d/(4 t alpha)) + (d/2) log(2 pi e t) - log |S^d|, minimal at
    t = (2p - d)/(4 alpha).
    """
    if not p > max(1.0, d / 2):
        raise DomainError(f"p must exceed max(1, d/2), got {p!r}")
    J = (p * math.log(2 * p / (2 * p - d))
         + d / 2 * math.log(math.pi * math.e * (2 * p - d) / (2 * alpha))
         - math.log(sphere_surface(d)))
    return alpha * math.exp(J / p)


# ---------------------------------------------------------------------------
# sweeps


def mu_curve(alphas: Sequence[float], d: int, q: float, opts: SolverOptions = DEFAULT_OPTIONS,
             asymptote: bool = True) -> CurveSample:
    """mu with mu_lower, mu_upper and mu_asymptotic on a grid of alpha values (warm-started)."""
    alphas = np.asarray(alphas, dtype=float)
    values, lower, upper, asym, branches = [], [], [], [], []
    previous = None
    critical = _is_critical(d, q)
    for a in alphas:
        res = mu(a, d, q, opts, initial=previous)
        if res.minimizer is not None:
            previous = res.minimizer
        values.append(res.value)
        branches.append(res.branch)
        lower.append(mu_lower(a, d, q) if not critical or a <= alpha_star(d) else alpha_star(d))
        upper.append(mu_upper(a, d, q) if not critical else min(a, alpha_star(d)))
        asym.append(mu_asymptotic(a, d, q) if asymptote and not critical else float("nan"))
    return CurveSample(alphas, np.array(values), np.array(lower), np.array(upper),
                       np.array(asym), tuple(branches), {"d": d, "q": q, "N": opts.N})
