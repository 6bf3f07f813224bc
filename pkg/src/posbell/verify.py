"""Quick oracle and property checks, run by ``posbell verify``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import chsh, halfline, periodic, prolate, projpair
from .grid import (
    GridSpec,
    a3_norm_grid,
    apply,
    dichotomic_from_set,
    fourier_roundtrip_residual,
)
from .profiles import BumpProfile, GaussianProfile

TSIRELSON = 2 * math.sqrt(2)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _projpair_oracle(rng):
    worst_formula = worst_ident = 0.0
    for _ in range(500):
        da, db = rng.integers(2, 9, size=2)
        ops = projpair.random_operator_set(rng, int(da), int(db))
        worst_formula = max(worst_formula, abs(projpair.chsh_norm_formula(ops) - projpair.chsh_norm_direct(ops)))
    for _ in range(100):
        pair = projpair.random_pair(int(rng.integers(2, 9)), rng)
        d = projpair.halmos_decompose(pair)
        worst_ident = max(worst_ident, projpair.commutator_identity_residual(pair),
                          projpair.centrality_residual(pair), max(d.residuals.values()))
    ok = worst_formula <= 1e-10 and worst_ident <= 1e-10
    return ok, f"formula-vs-direct {worst_formula:.1e}, identities {worst_ident:.1e}"


def _qubit_maximum(rng):
    pair = projpair.qubit_pair(math.pi / 4)
    d = projpair.halmos_decompose(pair)
    f, _ = projpair.half_eigenvector(d)
    st = projpair.build_max_state(d, d, f, f)
    val = projpair.chsh_expectation_dense(projpair.ChshOperatorSet.from_pairs(pair, pair), st.vector)
    return abs(val - TSIRELSON) <= 1e-10, f"<T> = {val:.12f}"


def _grid_basics(rng):
    spec = GridSpec.centered(256, 0.1)
    psi = rng.normal(size=256) + 1j * rng.normal(size=256)
    rt = fourier_roundtrip_residual(psi)
    a = dichotomic_from_set(spec, "momentum", (-1.0, 2.0))
    sq = float(np.max(np.abs(apply(a, apply(a, psi)) - psi)))
    return rt <= 1e-12 and sq <= 1e-12, f"round trip {rt:.1e}, A^2 - 1 {sq:.1e}"


def _critical_parameters(rng):
    u0 = prolate.critical_u(0).u
    u1 = prolate.critical_u(1).u
    ok = abs(u0 - 0.849) <= 0.005 and abs(u1 - 2.381) <= 0.005
    return ok, f"u0 = {u0:.5f}, u1 = {u1:.5f}"


def _spectral_curve(rng):
    curve = prolate.spectral_curve(np.linspace(0.1, 8.0, 40), k=5)
    ok = curve.ordering_violation() == 0.0 and curve.monotonicity_violation() == 0.0
    conv = float(np.max(np.abs(prolate.spectrum(prolate.build_hu(2.0, 64), 5)
                               - prolate.spectrum(prolate.build_hu(2.0, 128), 5))))
    return ok and conv <= 1e-10, f"ordering/monotone ok={ok}, 64 vs 128 nodes {conv:.1e}"


def _grid_vs_prolate(rng):
    u0 = prolate.critical_u(0, tol=1e-12).u
    spec = chsh.interval_grid(1024, u0)
    a1 = dichotomic_from_set(spec, "position", (-1.0, 1.0))
    a2 = dichotomic_from_set(spec, "momentum", (-u0, u0))
    val = a3_norm_grid(a1, a2, tol=1e-12)
    return abs(val - 1.0) <= 1e-3, f"grid ||A3|| at u0 = {val:.6f}"


def _beta_surface(rng):
    ha, hb, b = chsh.beta_surface_grid(101)
    i = np.unravel_index(np.argmax(b), b.shape)
    ok = abs(b.max() - TSIRELSON) <= 1e-12 and ha[i] == 0.5 and hb[i] == 0.5 and b.max() <= TSIRELSON + 1e-12
    return ok, f"max {b.max():.12f} at ({ha[i]}, {hb[i]})"


def _interval_chsh(rng):
    rep = chsh.evaluate_interval_chsh(chsh.IntervalSetup.critical(0, grid_n=512))
    return rep.expectation >= 2.80 and rep.expectation <= TSIRELSON + 1e-9, f"<T> = {rep.expectation:.6f}"


def _jump_ratio(rng):
    setup = chsh.IntervalSetup.critical(0, grid_n=256)
    q = np.linspace(0.9, 1.1, 801)
    amp = np.abs(chsh.interval_amplitude(q, np.full_like(q, 0.3), setup))
    r = chsh.discontinuity_ratio(q, amp, 1.0)
    return abs(r - (1 + math.sqrt(2))) <= 1e-3, f"ratio {r:.6f}"


def _appendix(rng):
    worst = 0.0
    for eta in np.round(np.arange(-10.0, 10.0001, 0.1), 10):
        off, diag = halfline.appendix_kernel_integrals(eta)
        t, s = halfline.tanh_sech(eta)
        worst = max(worst, abs(off - s), abs(diag - t))
    return worst <= 1e-8, f"max deviation {worst:.1e}"


def _semi_analytic(rng):
    eps = [0.4, 0.2, 0.1, 0.05, 0.01, 0.001]
    vals = [halfline.semi_analytic_chsh(e) for e in eps]
    mono = all(b >= a for a, b in zip(vals, vals[1:]))
    ok = mono and vals[-1] >= TSIRELSON - 1e-3 and max(vals) <= TSIRELSON + 1e-9
    return ok, f"monotone={mono}, <T>(1e-3) = {vals[-1]:.8f}"


def _tanh_relation(rng):
    f = GaussianProfile(width=0.1)
    spec = GridSpec.centered(2**18, 1 / 2**10)
    grid = halfline.tanh_relation_residual(0.2, spec, f)
    exact = halfline.multiplier_residual(0.2, f.fourier())
    return abs(grid - exact) <= 1e-3, f"grid {grid:.6f} vs diagonal {exact:.6f}"


def _origin_weight(rng):
    w = chsh.weight_at_origin(GaussianProfile())
    g05 = chsh.origin_weight_grid(0.05, GaussianProfile(), a=2.0)
    neg = chsh.weight_at_origin(BumpProfile(-3.0, -0.5))
    ok = abs(w - 0.25) <= 1e-12 and abs(g05 - 0.25) <= 5e-2 and abs(neg - 1.0) <= 1e-9
    return ok, f"limit {w:.6f}, eps=0.05 grid {g05:.6f}, negative support {neg:.6f}"


def _periodic(rng):
    vals = [periodic.commutation_check(u) for u in (1.0, 0.5, 1.0 / 3.0)]
    jump = periodic.commutation_check(1.01)
    jb = periodic.jump_lower_bound(0.01)
    ok = max(vals) <= 1e-6 and jump >= 0.70 and jb.bound >= 1.40 and jb.bell >= 2.44
    return ok, f"commuting max {max(vals):.1e}, u=1.01 {jump:.4f}, bound {jb.bound:.4f}, bell {jb.bell:.4f}"


CHECKS = [
    ("projpair oracle equivalence", _projpair_oracle),
    ("qubit maximal violation", _qubit_maximum),
    ("grid Fourier and dichotomic basics", _grid_basics),
    ("critical parameters u0, u1", _critical_parameters),
    ("eigenvalue curves ordered and increasing", _spectral_curve),
    ("grid commutator norm vs Nystrom at u0", _grid_vs_prolate),
    ("beta surface maximum", _beta_surface),
    ("interval CHSH on 512 grid", _interval_chsh),
    ("wavefunction jump ratio", _jump_ratio),
    ("appendix Fourier integrals", _appendix),
    ("half-line semi-analytic CHSH", _semi_analytic),
    ("tanh relation on the grid", _tanh_relation),
    ("weight at the origin", _origin_weight),
    ("periodic commutation and jump", _periodic),
]


def run_checks(seed: int = 0, names=None) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS:
        if names is not None and name not in names:
            continue
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failed check, reported with its message
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return results
