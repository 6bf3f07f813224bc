"""Command-line interface.

Every data-producing subcommand writes a table (CSV with a ``#`` JSON
provenance line, or JSON) to ``--out`` or stdout.  Exit status is 0 on
success, 1 for invalid input and 2 when a numerical method fails to
converge; errors are reported as a JSON record on stderr.

Default parameters keep each subcommand well under a minute.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__, chsh, halfline, periodic, prolate, tables, verify
from .errors import PosBellError, ValidationError
from .grid import GridSpec
from .profiles import GaussianProfile


@dataclass
class RunConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    out: str | None = None
    fmt: str = "csv"
    seed: int = 0


def _number(text: str) -> float:
    """Float or exact fraction such as ``1/3``."""
    try:
        return float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _index(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return v


def _positive_int(text: str) -> int:
    v = _index(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser, tol: float | None = None):
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized steps (default 0)")
    p.add_argument("--nodes", type=_positive_int, default=64, help="Gauss-Legendre nodes (default 64)")
    if tol is not None:
        p.add_argument("--tol", type=float, default=tol, help=f"solver tolerance (default {tol:g})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="posbell", description="CHSH violations from position and momentum projections")
    parser.add_argument("--version", action="version", version=f"posbell {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", help="top eigenvalues of H_u over a u-range")
    p.add_argument("--u-min", type=float, default=0.05)
    p.add_argument("--u-max", type=float, default=6.0)
    p.add_argument("--samples", type=_positive_int, default=120)
    p.add_argument("--k", type=_positive_int, default=5)
    _common(p)

    p = sub.add_parser("a3-curve", help="commutator norm ||A3|| as a function of u")
    p.add_argument("--u-min", type=float, default=0.05)
    p.add_argument("--u-max", type=float, default=6.0)
    p.add_argument("--samples", type=_positive_int, default=240)
    _common(p, tol=1e-10)

    p = sub.add_parser("critical-u", help="solve lambda_n(u) = 1/2")
    p.add_argument("--n", type=_index, default=0)
    p.add_argument("--n-max", type=_index, default=None, help="solve for all n up to this index")
    _common(p, tol=1e-6)

    p = sub.add_parser("beta-surface", help="maximal correlation over (h_A, h_B)")
    p.add_argument("--resolution", type=_positive_int, default=101)
    _common(p)

    p = sub.add_parser("wavefunction", help="maximally violating interval wavefunction on a grid")
    p.add_argument("--n", type=_index, default=0)
    p.add_argument("--grid-n", type=_positive_int, default=256)
    p.add_argument("--points-per-unit", type=_positive_int, default=16)
    p.add_argument("--d1", type=float, default=2.0)
    p.add_argument("--d2", type=float, default=2.0)
    _common(p, tol=1e-12)

    p = sub.add_parser("interval-chsh", help="CHSH value of the interval state on a grid")
    p.add_argument("--n", type=_index, default=0)
    p.add_argument("--u", type=float, default=None, help="default: the critical u_n")
    p.add_argument("--grid-n", type=_positive_int, default=512)
    p.add_argument("--d1", type=float, default=2.0)
    p.add_argument("--d2", type=float, default=2.0)
    _common(p, tol=1e-12)

    p = sub.add_parser("halfline-sweep", help="half-line CHSH convergence table")
    p.add_argument("--eps", type=float, nargs="+", default=[0.4, 0.2, 0.1, 0.05, 0.01, 0.001])
    p.add_argument("--width", type=float, default=1.0, help="width of the Gaussian g-profile")
    p.add_argument("--grid-n", type=_positive_int, default=None, help="also evaluate on a grid of this size")
    p.add_argument("--x-max", type=float, default=1000.0, help="grid half-width for --grid-n")
    _common(p)

    p = sub.add_parser("appendix-check", help="Fourier integrals against sech and tanh")
    p.add_argument("--eta-min", type=float, default=-10.0)
    p.add_argument("--eta-max", type=float, default=10.0)
    p.add_argument("--eta-step", type=float, default=0.1)
    _common(p, tol=1e-8)

    p = sub.add_parser("periodic-scan", help="commutator norm for periodic sets over u")
    p.add_argument("--u", type=_number, nargs="+",
                   default=[1.0, 0.5, 1 / 3, 0.25, 1.01, 0.51, 0.26])
    _common(p, tol=1e-12)

    p = sub.add_parser("periodic-bound", help="lower bound on the commutator at u = 1 + eps")
    p.add_argument("--eps", type=float, nargs="+", default=[0.25, 0.1, 0.05, 0.01, 0.001])
    _common(p)

    p = sub.add_parser("verify", help="run the oracle and property checks")
    _common(p)
    return parser


def _meta(config: RunConfig) -> dict:
    return {"tool": "posbell", "version": __version__, "command": config.subcommand,
            "params": config.params, "seed": config.seed}


def _spectrum(c: RunConfig) -> tables.Table:
    p = c.params
    if not 0 < p["u_min"] < p["u_max"] or p["samples"] < 2:
        raise ValidationError("need 0 < u-min < u-max and samples >= 2")
    us = np.linspace(p["u_min"], p["u_max"], p["samples"])
    curve = prolate.spectral_curve(us, k=p["k"], n_nodes=p["nodes"])
    cols = ("u",) + tuple(f"lambda_{i}" for i in range(p["k"]))
    rows = [[u, *lam] for u, lam in zip(curve.u_samples, curve.eigenvalue_rows)]
    return tables.Table(_meta(c), cols, rows)


def _a3_curve(c: RunConfig) -> tables.Table:
    p = c.params
    if not 0 < p["u_min"] < p["u_max"] or p["samples"] < 2:
        raise ValidationError("need 0 < u-min < u-max and samples >= 2")
    us = list(np.linspace(p["u_min"], p["u_max"], p["samples"]))
    crit = []
    n = 0
    while True:
        cp = prolate.critical_u(n, tol=p["tol"], n_nodes=p["nodes"])
        if cp.u > p["u_max"]:
            break
        if cp.u >= p["u_min"]:
            crit.append(cp.u)
        n += 1
    us = sorted(set(us) | set(crit))
    rows = [[u, a3, any(abs(u - x) == 0 for x in crit)]
            for u, a3 in prolate.a3_norm_curve(us, n_nodes=p["nodes"])]
    meta = _meta(c)
    meta["critical_u"] = crit
    return tables.Table(meta, ("u", "a3_norm", "critical"), rows)


def _critical_u(c: RunConfig) -> tables.Table:
    p = c.params
    ns = range(p["n_max"] + 1) if p.get("n_max") is not None else [p["n"]]
    rows = []
    for n in ns:
        cp = prolate.critical_u(n, tol=p["tol"], n_nodes=p["nodes"])
        rows.append([n, cp.u, cp.eigenvalue, cp.residual, cp.bracket_width])
    return tables.Table(_meta(c), ("n", "u", "eigenvalue", "residual", "bracket_width"), rows)


def _beta(c: RunConfig) -> tables.Table:
    ha, hb, b = chsh.beta_surface_grid(c.params["resolution"])
    rows = [[x, y, z] for x, y, z in zip(ha.ravel(), hb.ravel(), b.ravel())]
    return tables.Table(_meta(c), ("h_a", "h_b", "beta"), rows)


def _wavefunction(c: RunConfig) -> tables.Table:
    p = c.params
    cp = prolate.critical_u(p["n"], tol=p["tol"], n_nodes=p["nodes"])
    grid = chsh.interval_grid(p["grid_n"], cp.u, p["d1"], p["points_per_unit"],
                              band_halfwidth=2 * cp.u / p["d1"])
    setup = chsh.IntervalSetup.from_u(cp.u, p["n"], p["d1"], p["d2"], grid=grid)
    psi = chsh.build_interval_state(setup, n_nodes=p["nodes"])
    q = grid.points
    amp = psi.amplitudes
    qa, qb = np.meshgrid(q, q, indexing="ij")
    rows = [[x, y, m, a] for x, y, m, a in zip(qa.ravel(), qb.ravel(), np.abs(amp).ravel(), np.angle(amp).ravel())]
    meta = _meta(c)
    meta.update({"u": cp.u, "discontinuities": [-p["d1"] / 2, p["d1"] / 2], "grid": grid.to_json()})
    return tables.Table(meta, ("q_a", "q_b", "abs", "arg"), rows)


def _interval_chsh(c: RunConfig) -> tables.Table:
    p = c.params
    if p.get("u") is None:
        setup = chsh.IntervalSetup.critical(p["n"], tol=p["tol"], n_nodes=p["nodes"], d1=p["d1"], d2=p["d2"],
                                            grid_n=p["grid_n"])
    else:
        setup = chsh.IntervalSetup.from_u(p["u"], p["n"], p["d1"], p["d2"], grid_n=p["grid_n"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        rep = chsh.evaluate_interval_chsh(setup, n_nodes=p["nodes"])
    d = rep.diagnostics
    meta = _meta(c)
    meta["setup"] = rep.setup
    row = [setup.u, setup.n, setup.grid_a.n_points, rep.expectation, rep.deficit, d["spectral_bound"],
           d["eigenvalue"], d["imag_residue"], d["edge_mass"]]
    cols = ("u", "n", "grid_n", "expectation", "deficit", "spectral_bound", "eigenvalue", "imag_residue", "edge_mass")
    return tables.Table(meta, cols, [row])


def _halfline(c: RunConfig) -> tables.Table:
    p = c.params
    g = GaussianProfile(width=p["width"])
    rows = []
    for eps in p["eps"]:
        t = halfline.semi_analytic_chsh(eps, g)
        row = [eps, t, chsh.TSIRELSON - t, halfline.multiplier_residual(eps, g)]
        if p.get("grid_n"):
            spec = GridSpec.centered(p["grid_n"], 2 * p["x_max"] / p["grid_n"])
            row.append(chsh.halfline_grid_chsh(eps, GaussianProfile(width=0.5 / p["width"]), spec).value)
        rows.append(row)
    cols = ("eps", "chsh", "deficit", "residual") + (("grid_chsh",) if p.get("grid_n") else ())
    return tables.Table(_meta(c), cols, rows)


def _appendix(c: RunConfig) -> tables.Table:
    p = c.params
    if p["eta_step"] <= 0 or p["eta_max"] < p["eta_min"]:
        raise ValidationError("need eta-step > 0 and eta-max >= eta-min")
    n = int(math.floor((p["eta_max"] - p["eta_min"]) / p["eta_step"] + 1e-9)) + 1
    etas = np.round(p["eta_min"] + p["eta_step"] * np.arange(n), 12)
    tab = halfline.appendix_table(etas)
    rows = [[*r, abs(r[3] - r[2]), abs(r[4] - r[1])] for r in tab.tolist()]
    meta = _meta(c)
    meta["max_error"] = max(max(r[5], r[6]) for r in rows)
    meta["passed"] = meta["max_error"] <= p["tol"]
    return tables.Table(meta, ("eta", "tanh", "sech", "offdiag_quad", "diag_quad", "err_offdiag", "err_diag"), rows)


def _periodic_scan(c: RunConfig) -> tables.Table:
    rows = [list(r) for r in periodic.jump_scan(c.params["u"], tol=c.params["tol"], seed=c.seed)]
    return tables.Table(_meta(c), ("u", "a3_norm", "n_points"), rows)


def _periodic_bound(c: RunConfig) -> tables.Table:
    rows = []
    for eps in c.params["eps"]:
        jb = periodic.jump_lower_bound(eps)
        rows.append([eps, jb.bound, jb.bell, jb.n_terms])
    return tables.Table(_meta(c), ("eps", "bound", "bell", "n_terms"), rows)


def _verify(c: RunConfig) -> tables.Table:
    res = verify.run_checks(seed=c.seed)
    rows = [[r.name, "PASS" if r.passed else "FAIL", r.detail] for r in res]
    meta = _meta(c)
    meta["all_passed"] = all(r.passed for r in res)
    return tables.Table(meta, ("check", "status", "detail"), rows)


HANDLERS = {
    "spectrum": _spectrum,
    "a3-curve": _a3_curve,
    "critical-u": _critical_u,
    "beta-surface": _beta,
    "wavefunction": _wavefunction,
    "interval-chsh": _interval_chsh,
    "halfline-sweep": _halfline,
    "appendix-check": _appendix,
    "periodic-scan": _periodic_scan,
    "periodic-bound": _periodic_bound,
    "verify": _verify,
}


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "out", "fmt", "seed")}
    return RunConfig(ns.subcommand, params, ns.out, ns.fmt, ns.seed)


def run(config: RunConfig) -> int:
    table = HANDLERS[config.subcommand](config)
    text = tables.render(table, config.fmt)
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if config.subcommand == "verify":
        return 0 if table.meta["all_passed"] else 1
    if config.subcommand == "appendix-check" and not table.meta["passed"]:
        return 2
    return 0


def main(argv=None) -> int:
    try:
        return run(parse_config(argv))
    except PosBellError as exc:
        sys.stderr.write(json.dumps(exc.to_record(), sort_keys=True) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
