"""Command-line front end.

Exit codes: 0 success, 1 inequality violation, 2 solver failure, 3 usage error.
Numbers are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from sphere_bounds import constants as cst
from sphere_bounds import euclidean as eu
from sphere_bounds import spectral as sp
from sphere_bounds import sphere_constants as sc
from sphere_bounds import stereographic as st
from sphere_bounds.errors import DataError, DomainError, SolverError
from sphere_bounds.ultraspherical import build_grid

EXIT_OK, EXIT_VIOLATION, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2, 3
FAMILIES = ("mu", "nu", "xi", "ratio")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    return f"{float(x):.17g}"


def _write_csv(header, rows, out: Optional[str]):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _solver_options(args) -> sc.SolverOptions:
    return replace(sc.DEFAULT_OPTIONS, N=args.grid) if args.grid else sc.DEFAULT_OPTIONS


# -- sweeps -------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """One family of constants sampled on a linear or logarithmic parameter range."""

    family: str
    d: int
    exponent: float
    lo: float
    hi: float
    steps: int
    spacing: str = "log"
    N: Optional[int] = None
    out: Optional[str] = None
    jobs: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"family must be one of {FAMILIES}")
        if not self.lo < self.hi:
            raise UsageError("need min < max")
        if self.steps < 2:
            raise UsageError("need at least 2 steps")
        if self.spacing not in ("linear", "log"):
            raise UsageError("spacing must be 'linear' or 'log'")
        if self.spacing == "log" and not self.lo > 0:
            raise UsageError("log spacing needs min > 0")
        if self.jobs < 1:
            raise UsageError("jobs must be positive")

    def parameters(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, self.steps)
        return np.linspace(self.lo, self.hi, self.steps)

    def header(self):
        return {
            "mu": ["alpha", "mu", "mu_lower", "mu_upper", "mu_asymp", "branch", "status"],
            "ratio": ["alpha", "ratio", "status"],
            "nu": ["beta", "nu", "nu_asymp", "branch", "status"],
            "xi": ["alpha", "xi", "xi_asymp", "branch", "status"],
        }[self.family]


def _sweep_row(spec: SweepSpec, x: float, initial=None):
    """(row, minimiser, violated); solver failures become a status entry."""
    opts = replace(sc.DEFAULT_OPTIONS, N=spec.N) if spec.N else sc.DEFAULT_OPTIONS
    d, e = spec.d, spec.exponent
    nan = float("nan")
    try:
        if spec.family in ("mu", "ratio"):
            res = sc.mu(x, d, e, opts, initial=initial)
            critical = sc._is_critical(d, e)
            asym = nan if critical or e == cst.INF else sc.mu_asymptotic(x, d, e)
            if spec.family == "ratio":
                return [x, res.value / asym, "ok"], res.minimizer, False
            if critical:
                lower = upper = cst.alpha_star(d) if x > cst.alpha_star(d) else x
            elif e == cst.INF:
                lower, upper = nan, nan
            else:
                lower, upper = sc.mu_lower(x, d, e), sc.mu_upper(x, d, e)
            tol = 1e-6 * max(1.0, abs(res.value))
            violated = not (lower - tol <= res.value <= upper + tol) if math.isfinite(lower) else False
            return [x, res.value, lower, upper, asym, res.branch, "violation" if violated else "ok"], \
                res.minimizer, violated
        if spec.family == "nu":
            res = sc.nu(x, d, e, opts)
            return [x, res.value, sc.nu_asymptotic(x, d, e), res.branch, "ok"], None, False
        res = sc.xi(x, d, e, opts)
        return [x, res.value, sc.xi_asymptotic(x, d, e), res.branch, "ok"], None, False
    except SolverError as exc:
        width = len(spec.header()) - 2
        return [x] + [nan] * width + [f"solver_error: {exc}"], None, False


def _sweep_row_independent(args):
    spec, x = args
    row, _, violated = _sweep_row(spec, x)
    return row, violated


def run_sweep(spec: SweepSpec):
    """Evaluate the sweep; returns (header, rows, exit code).

    With one job the rows are warm-started in order; with several jobs each
    row is solved independently and results are gathered in parameter order.
    """
    xs = [float(x) for x in spec.parameters()]
    rows, violations = [], []
    if spec.jobs == 1:
        previous = None
        for x in xs:
            row, minimizer, violated = _sweep_row(spec, x, previous)
            if minimizer is not None:
                previous = minimizer
            rows.append(row)
            violations.append(violated)
    else:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            for row, violated in pool.map(_sweep_row_independent, [(spec, x) for x in xs]):
                rows.append(row)
                violations.append(violated)
    header = spec.header()
    _write_csv(header, rows, spec.out)
    if any(str(r[-1]).startswith("solver_error") for r in rows):
        code = EXIT_SOLVER
    elif any(violations):
        code = EXIT_VIOLATION
    else:
        code = EXIT_OK
    return header, rows, code


def plot_script(csv_path: str, header) -> str:
    """Plain gnuplot script for the first two CSV columns."""
    log = "set logscale x\n"
    return (f"set datafile separator ','\nset key autotitle columnhead\n{log}"
            f"set xlabel '{header[0]}'\nset ylabel '{header[1]}'\n"
            f"plot '{csv_path}' using 1:2 with linespoints\n")


# -- subcommands --------------------------------------------------------------

def cmd_constants(args):
    ds = [args.d] if args.d else list(range(1, 11))
    rows = []
    for d in ds:
        s_d = cst.sobolev_constant(d) if d >= 3 else float("nan")
        rows.append([d, cst.sphere_surface(d), cst.jacobi_normalization(d), cst.critical_exponent(d),
                     cst.alpha_star(d), s_d])
    _write_csv(["d", "sphere_surface", "jacobi_normalization", "critical_exponent", "alpha_star",
                "sobolev_constant"], rows, args.out)
    return EXIT_OK


def cmd_gns(args, dual=False):
    q = _require(args, "q")
    res = eu.dual_gns_constant(q, args.d) if dual else eu.gns_constant(q, args.d)
    w0 = res.profile.central_value if res.profile is not None else float("nan")
    _write_csv(["d", "q", "K" if not dual else "K_dual", "central_value"], [[args.d, q, res.constant, w0]],
               args.out)
    return EXIT_OK


def cmd_mu(args):
    alpha, q = _require(args, "alpha"), _require(args, "q")
    res = sc.mu(alpha, args.d, q, _solver_options(args))
    _write_csv(["alpha", "mu", "branch"], [[alpha, res.value, res.branch]], args.out)
    return EXIT_OK


def cmd_nu(args):
    beta, q = _require(args, "beta"), _require(args, "q")
    res = sc.nu(beta, args.d, q, _solver_options(args))
    _write_csv(["beta", "nu", "branch"], [[beta, res.value, res.branch]], args.out)
    return EXIT_OK


def cmd_xi(args):
    alpha, p = _require(args, "alpha"), _require(args, "p")
    res = sc.xi(alpha, args.d, p, _solver_options(args))
    _write_csv(["alpha", "xi", "branch"], [[alpha, res.value, res.branch]], args.out)
    return EXIT_OK


def cmd_alpha_of_mu(args):
    mu_val, q = _require(args, "mu"), _require(args, "q")
    alpha = sc.alpha_of_mu(mu_val, args.d, q, _solver_options(args))
    _write_csv(["mu", "alpha"], [[mu_val, alpha]], args.out)
    return EXIT_OK


def _sweep_from_args(args, family):
    exponent = args.q if family in ("mu", "ratio", "nu") else args.p
    if exponent is None:
        raise UsageError(f"--{'p' if family == 'xi' else 'q'} is required")
    spec = SweepSpec(family, args.d, exponent, args.min, args.max, args.steps, args.spacing,
                     args.grid, args.out, args.jobs)
    if family != "xi":
        cst.exponents(args.d, exponent)
    _, _, code = run_sweep(spec)
    if args.plot_script:
        target = args.out or "sweep.csv"
        Path(args.plot_script).write_text(plot_script(target, spec.header()))
    return code


def cmd_mu_sweep(args):
    return _sweep_from_args(args, args.family)


def cmd_ratio_sweep(args):
    return _sweep_from_args(args, "ratio")


def _potential(text, d, p, sign, grid_N):
    kind, _, arg = (text or "").partition(":")
    if kind == "const":
        return sp.Potential.const(float(arg))
    if kind == "file":
        return sp.Potential.from_csv(arg, build_grid(d, grid_N or sc.DEFAULT_OPTIONS.N))
    if kind == "equality":
        value = float(arg)
        if sign == "neg":
            return sp.equality_potential(value, d, cst.q_from_p(p, "negative"))
        return sp.dual_equality_potential(value, d, cst.q_from_p(p, "positive"))
    raise UsageError("--potential must be const:C, file:PATH or equality:MU")


def cmd_eigen(args):
    p = _require(args, "p")
    pot = _potential(args.potential, args.d, p, args.sign, args.grid)
    grid = build_grid(args.d, args.grid) if args.grid else None
    if args.alpha is not None:
        rep = sp.logsob_report(pot, args.alpha, p, args.d, grid)
    elif args.sign == "neg":
        rep = sp.klt_report(pot, p, args.d, grid)
    else:
        rep = sp.dual_klt_report(pot, p, args.d, grid)
    _write_csv(["lambda1", "bound", "slack", "norm"], [[rep.lambda1, rep.bound, rep.slack, rep.norm]],
               args.out)
    return EXIT_OK if rep.slack >= -args.tol else EXIT_VIOLATION


def verification_checks(seed: int = 0, tol: float = 1e-7):
    """Quick property checks: (name, passed, detail) triples."""
    rng = np.random.default_rng(seed)
    checks = []
    checks.append(("K_inf_1 = 2", eu.gns_constant(cst.INF, 1).constant == 2.0, ""))
    ok = all(sc.mu(a, 3, 3).value == a for a in (0.5, 1.0, 2.0, 3.0))
    checks.append(("exact line mu(alpha) = alpha, d=3 q=3", ok, ""))
    vals = [(sc.mu_lower(a, 3, 3), sc.mu(a, 3, 3).value, sc.mu_upper(a, 3, 3)) for a in (4.0, 6.0)]
    ok = all(lo - 1e-6 <= m <= up + 1e-6 for lo, m, up in vals)
    checks.append(("sandwich mu_lower <= mu <= mu_upper", ok, repr(vals)))
    grid = build_grid(3, 64)
    worst = min(sp.klt_report(sp.random_zonal_potential(grid, rng, kind="nonnegative", scale=3.0),
                              3.0, 3, grid).slack for _ in range(5))
    checks.append(("random V: |lambda_1| <= alpha(||V||_p)", worst >= -tol, f"min slack {worst:.3g}"))
    worst = min(sp.dual_klt_report(sp.random_zonal_potential(grid, rng, kind="positive", scale=3.0),
                                   2.0, 3, grid).slack for _ in range(5))
    checks.append(("random W: lambda_1 >= nu(beta)", worst >= -tol, f"min slack {worst:.3g}"))
    rep = st.energy_identity_check(st.aubin_talenti(3), None, 6.0, 3)
    checks.append(("conformal identities (Aubin-Talenti, d=3)", rep.holds(1e-6),
                   f"{rep.energy_residual:.3g}, {rep.power_residual:.3g}"))
    return checks


def cmd_verify(args):
    checks = verification_checks(args.seed, args.tol)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_VIOLATION


def _require(args, name):
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"--{name} is required")
    return value


# -- parser -------------------------------------------------------------------

def _add_common(p, sweep=False):
    p.add_argument("--d", type=int, default=3, help="sphere dimension")
    p.add_argument("--q", type=float, help="exponent q")
    p.add_argument("--p", type=float, help="exponent p")
    p.add_argument("--grid", type=int, help="number of Gauss-Jacobi nodes N")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--tol", type=float, default=1e-7, help="allowed negative slack")
    p.add_argument("--seed", type=int, default=0)
    if sweep:
        p.add_argument("--min", type=float, required=True)
        p.add_argument("--max", type=float, required=True)
        p.add_argument("--steps", type=int, default=40)
        p.add_argument("--spacing", choices=("linear", "log"), default="log")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--plot-script", help="also write a gnuplot script reading the CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sphere-bounds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("constants", help="geometric constants for one or all d <= 10")
    p.add_argument("--d", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("gns", help="Euclidean GNS constant K_{q,d}")
    _add_common(p)
    p.set_defaults(func=cmd_gns)
    p = sub.add_parser("dual-gns", help="dual Euclidean constant K*_{q,d}, q < 2")
    _add_common(p)
    p.set_defaults(func=lambda a: cmd_gns(a, dual=True))

    for name, func, extra in (("mu", cmd_mu, "alpha"), ("nu", cmd_nu, "beta"), ("xi", cmd_xi, "alpha"),
                              ("alpha-of-mu", cmd_alpha_of_mu, "mu")):
        p = sub.add_parser(name)
        _add_common(p)
        p.add_argument(f"--{extra}", type=float)
        p.set_defaults(func=func)

    p = sub.add_parser("mu-sweep", help="sample mu (or nu, xi) on a parameter range")
    _add_common(p, sweep=True)
    p.add_argument("--family", choices=("mu", "nu", "xi"), default="mu")
    p.set_defaults(func=cmd_mu_sweep)
    p = sub.add_parser("ratio-sweep", help="mu(alpha) / mu_asymp(alpha) on a range")
    _add_common(p, sweep=True)
    p.set_defaults(func=cmd_ratio_sweep)

    p = sub.add_parser("eigen", help="first eigenvalue against its bound")
    _add_common(p)
    p.add_argument("--potential", required=True, help="const:C | file:PATH | equality:MU")
    p.add_argument("--sign", choices=("neg", "pos"), default="neg",
                   help="neg: -Delta - V; pos: -Delta + W")
    p.add_argument("--alpha", type=float, help="with --sign pos: log-Sobolev form at this alpha")
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("verify", help="run a quick property suite")
    _add_common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
