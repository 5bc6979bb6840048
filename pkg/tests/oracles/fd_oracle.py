"""Independent finite-difference oracles for the frozen reference values.

Run ``python3 tests/oracles/fd_oracle.py`` to regenerate the numbers frozen
in the test modules.  Nothing here imports sphere_bounds: every quantity is
obtained by direct L-BFGS minimisation of a quotient discretised with
second-order finite differences on a uniform grid, followed by Richardson
extrapolation in the grid spacing.
"""

import json
import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize
from scipy.special import gamma


def _fd_forms(x, weight):
    """Discrete (stiffness, mass) forms with weights at midpoints and nodes."""
    h = x[1] - x[0]
    mid = 0.5 * (x[1:] + x[:-1])
    wm = weight(mid) * h
    wn = weight(x) * h
    wn[0] *= 0.5
    wn[-1] *= 0.5
    return wm, wn, h


def _minimise(obj, v0, positive=False):
    bounds = [(0.0, None)] * v0.size if positive else None
    res = minimize(obj, v0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"maxiter": 200000, "maxfun": 400000, "ftol": 1e-16, "gtol": 1e-12,
                            "maxcor": 30})
    return res.fun


def gns_fd(q, d, R, n):
    """(||v'||^2 + ||v||^2) / ||v||_q^2 on the radial grid [0, R], v(R) free."""
    x = np.linspace(0.0, R, n + 1)
    area = 2 * math.pi ** (d / 2) / gamma(d / 2)
    wm, wn, h = _fd_forms(x, lambda r: area * r ** (d - 1))

    def obj(v):
        dv = np.diff(v) / h
        G = wm @ dv**2
        M = wn @ v**2
        Q = wn @ np.abs(v) ** q
        val = (G + M) / Q ** (2 / q)
        gG = np.zeros_like(v)
        t = 2 * wm * dv / h
        gG[:-1] -= t
        gG[1:] += t
        gM = 2 * wn * v
        gQ = q * wn * np.abs(v) ** (q - 1) * np.sign(v)
        grad = (gG + gM) / Q ** (2 / q) - (2 / q) * (G + M) * Q ** (-2 / q - 1) * gQ
        return val, grad

    return _minimise(obj, 1.0 / np.cosh(x))


def dual_fd(q, d, R, n, support):
    """(||v'||^2 + ||v||_q^2) / ||v||^2 over nonnegative radial v on [0, R].

    The minimiser has compact support; the start is a parabola on [0, support].
    """
    x = np.linspace(0.0, R, n + 1)
    area = 2 * math.pi ** (d / 2) / gamma(d / 2)
    wm, wn, h = _fd_forms(x, lambda r: area * r ** (d - 1))

    def obj(v):
        dv = np.diff(v) / h
        G = wm @ dv**2
        M = wn @ v**2
        Q = wn @ np.abs(v) ** q
        val = (G + Q ** (2 / q)) / M
        gG = np.zeros_like(v)
        t = 2 * wm * dv / h
        gG[:-1] -= t
        gG[1:] += t
        gQ = q * wn * np.abs(v) ** (q - 1)
        gnum = gG + (2 / q) * Q ** (2 / q - 1) * gQ
        grad = gnum / M - val * 2 * wn * v / M
        return val, grad

    return _minimise(obj, np.maximum(1 - (x / support) ** 2, 0.0), positive=True)


def mu_fd(alpha, d, q, n):
    """Zonal quotient on S^d in the polar angle t in [0, pi] (probability normalisation)."""
    t = np.linspace(0.0, math.pi, n + 1)
    Z = quad(lambda s: math.sin(s) ** (d - 1), 0, math.pi)[0]
    wm, wn, h = _fd_forms(t, lambda s: np.sin(s) ** (d - 1) / Z)

    def obj(v):
        dv = np.diff(v) / h
        G = wm @ dv**2
        M = wn @ v**2
        Q = wn @ np.abs(v) ** q
        val = (G + alpha * M) / Q ** (2 / q)
        gG = np.zeros_like(v)
        s = 2 * wm * dv / h
        gG[:-1] -= s
        gG[1:] += s
        gQ = q * wn * np.abs(v) ** (q - 1) * np.sign(v)
        grad = (gG + 2 * alpha * wn * v) / Q ** (2 / q) - (2 / q) * (G + alpha * M) * Q ** (-2 / q - 1) * gQ
        return val, grad

    return _minimise(obj, 1.0 + 0.5 * np.cos(t) + 0.5 * np.exp(-alpha * (1 + np.cos(t)) / 4))


def richardson(f, n):
    """Second-order extrapolation from grids n and 2n."""
    a, b = f(n), f(2 * n)
    return (4 * b - a) / 3, abs(b - a)


def mu_upper_bruteforce(alpha, d, q, m=20001):
    """min over an eps grid of (alpha + (d + alpha) eps^2/(d+1)) / (int |1+eps z|^q dnu)^{2/q}."""
    Z = quad(lambda z: (1 - z * z) ** (d / 2 - 1), -1, 1)[0]
    best = math.inf
    for eps in np.linspace(0.0, 1.0, m):
        denom = quad(lambda z: abs(1 + eps * z) ** q * (1 - z * z) ** (d / 2 - 1), -1, 1,
                     epsabs=0, epsrel=1e-13)[0] / Z
        best = min(best, (alpha + (d + alpha) * eps**2 / (d + 1)) / denom ** (2 / q))
    return best


def main():
    out = {}
    out["K_3_3"] = richardson(lambda n: gns_fd(3.0, 3, 30.0, n), 3000)
    out["Kstar_1.2_3"] = richardson(lambda n: dual_fd(1.2, 3, 4.0, n, 2.0), 1000)
    out["mu_6_3_3"] = richardson(lambda n: mu_fd(6.0, 3, 3.0, n), 2000)
    out["mu_20_3_3"] = richardson(lambda n: mu_fd(20.0, 3, 3.0, n), 2000)
    out["mu_upper_6_3_3"] = (mu_upper_bruteforce(6.0, 3, 3.0, 2001), 0.0)
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
