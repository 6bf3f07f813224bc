"""CHSH correlations for two-time position measurements.

Alice and Bob each ask whether their particle lies in ``D1 = [-d1/2, d1/2]``
at time 0 and in ``D2 = [-d2/2, d2/2]`` at time t.  For a free particle
the time-t question is unitarily equivalent to a momentum question:
``chi_D2(Q_t) = U* chi_{(m/t) D2}(P) U`` with ``U = exp(i m Q^2 / 2t)``
(hbar = 1).  After rescaling positions by ``d1/2`` the only parameter left
is ``u = m d1 d2 / (4 t)``, and the pair reduces to the time-band limiting
operator ``H_u`` studied in :mod:`posbell.prolate`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from . import prolate
from .errors import ConvergenceError, DomainError, ResolutionError, TruncationError, ValidationError
from .grid import (
    GridSpec,
    WaveFunction2D,
    chsh_expectation,
    conjugated,
    dichotomic_from_set,
    quadratic_phase,
)
from .profiles import as_profile

TSIRELSON = 2.0 * math.sqrt(2.0)
MIN_POINTS_PER_UNIT = 8


def beta_surface(h_a, h_b):
    """Maximal CHSH correlation ``2 sqrt(1 + 4 sqrt(hA (1-hA)) sqrt(hB (1-hB)))``.

    Accepts scalars or broadcastable arrays with entries in [0, 1].
    """
    h_a = np.asarray(h_a, dtype=float)
    h_b = np.asarray(h_b, dtype=float)
    for name, h in (("h_a", h_a), ("h_b", h_b)):
        if np.any(~np.isfinite(h)) or np.any(h < 0) or np.any(h > 1):
            raise DomainError(f"{name} must lie in [0, 1]")
    val = 2.0 * np.sqrt(1.0 + 4.0 * np.sqrt(h_a * (1 - h_a)) * np.sqrt(h_b * (1 - h_b)))
    return float(val) if val.ndim == 0 else val


def beta_surface_grid(resolution: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Surface sampled on a ``resolution x resolution`` lattice of [0, 1]^2."""
    if int(resolution) != resolution or resolution < 2:
        raise ValidationError(f"resolution must be an integer >= 2, got {resolution}")
    h = np.linspace(0.0, 1.0, int(resolution))
    ha, hb = np.meshgrid(h, h, indexing="ij")
    return ha, hb, beta_surface(ha, hb)


# --- interval setup ------------------------------------------------------------


def interval_grid(n_points: int, u: float, d1: float = 2.0, min_points_per_unit: int = MIN_POINTS_PER_UNIT,
                  band_halfwidth: float | None = None) -> GridSpec:
    """Cell-centred grid adapted to the interval problem.

    Positions ``+-d1/2`` fall on cell boundaries.  The spacing is
    ``(d1/2) / M`` for the smallest ``M >= min_points_per_unit`` whose
    momentum grid places the band edge ``kappa`` (default ``2u/d1``) near
    the middle between two momentum samples, which keeps the discrete band
    width close to the continuum one.
    """
    if not u > 0:
        raise DomainError(f"u must be positive, got {u}")
    half = d1 / 2.0
    kappa = 2.0 * u / d1 if band_halfwidth is None else band_halfwidth
    best = None
    for m in range(min_points_per_unit, 4 * min_points_per_unit):
        length = n_points * half / m
        frac = (kappa * length / (2 * np.pi)) % 1.0
        score = abs(frac - 0.5)
        if score <= 0.2:
            best = m
            break
        if best is None or score < best[1]:
            best = (m, score)
    m = best if isinstance(best, int) else best[0]
    return GridSpec.centered(n_points, half / m)


@dataclass(frozen=True)
class IntervalSetup:
    """Symmetric two-interval configuration shared by Alice and Bob.

    ``u = mass d1 d2 / (4 time)`` with hbar = 1.  ``n`` selects the
    eigenfunction of ``H_u`` used to build the state.
    """

    d1: float
    d2: float
    mass: float
    time: float
    n: int
    grid_a: GridSpec
    grid_b: GridSpec

    def __post_init__(self):
        for name in ("d1", "d2", "mass", "time"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if int(self.n) != self.n or self.n < 0:
            raise ValidationError("n must be a nonnegative integer")

    @property
    def u(self) -> float:
        return self.mass * self.d1 * self.d2 / (4.0 * self.time)

    @property
    def band_halfwidth(self) -> float:
        """Momentum half-width ``(m/t) d2/2`` equivalent to the time-t interval."""
        return self.mass * self.d2 / (2.0 * self.time)

    @property
    def phase_coefficient(self) -> float:
        """Coefficient ``m / (2t)`` of the free-evolution quadratic phase."""
        return self.mass / (2.0 * self.time)

    @classmethod
    def from_u(cls, u: float, n: int = 0, d1: float = 2.0, d2: float = 2.0, grid_n: int = 512,
               grid: GridSpec | None = None, min_points_per_unit: int = MIN_POINTS_PER_UNIT) -> "IntervalSetup":
        """Unit mass and the evolution time that realizes ``u``."""
        if not u > 0:
            raise DomainError(f"u must be positive, got {u}")
        time = d1 * d2 / (4.0 * u)
        if grid is None:
            grid = interval_grid(grid_n, u, d1, min_points_per_unit)
        return cls(d1, d2, 1.0, time, n, grid, grid)

    @classmethod
    def critical(cls, n: int = 0, tol: float = 1e-12, n_nodes: int = 64, **kw) -> "IntervalSetup":
        """Setup at the critical parameter ``u_n``."""
        cp = prolate.critical_u(n, tol=tol, n_nodes=n_nodes)
        return cls.from_u(cp.u, n=n, **kw)

    def describe(self) -> dict:
        return {"d1": self.d1, "d2": self.d2, "mass": self.mass, "time": self.time, "u": self.u, "n": self.n,
                "grid_a": self.grid_a.to_json(), "grid_b": self.grid_b.to_json()}


def _check_resolution(spec: GridSpec, d1: float, min_points_per_unit: int):
    per_unit = (d1 / 2.0) / spec.dx
    if per_unit < min_points_per_unit * (1 - 1e-9):
        raise ResolutionError(f"grid has {per_unit:.3g} points per half-interval length; "
                              f"at least {min_points_per_unit} are needed to resolve the jumps at +-d1/2")


def _inside(q: np.ndarray, d1: float) -> np.ndarray:
    # Points exactly on the boundary take the inside value.
    return np.abs(q) <= 0.5 * d1 * (1 + 1e-12)


def _half_eigenfunction(setup: IntervalSetup, n_nodes: int, u_tol: float) -> prolate.Eigenfunction:
    ef = prolate.eigenvector(prolate.build_hu(setup.u, n_nodes), setup.n)
    if abs(ef.eigenvalue - 0.5) > u_tol:
        warnings.warn(f"lambda_{setup.n}({setup.u:.6g}) = {ef.eigenvalue:.6g} is not 1/2; "
                      "the state is not maximally violating", UserWarning, stacklevel=3)
    return ef


def _e_pm(ef: prolate.Eigenfunction, q: np.ndarray, d1: float) -> tuple[np.ndarray, np.ndarray]:
    # sqrt(2) P2 f, band-limited on the whole line, in the rescaled variable 2q/d1.
    g = math.sqrt(2.0) * ef.band_limited_extension(2.0 * q / d1)
    inside = _inside(q, d1)
    return np.where(inside, -1j, 1.0) * g, np.where(inside, -1j, -1.0) * g


def build_interval_state(setup: IntervalSetup, n_nodes: int = 64, u_tol: float = 1e-6,
                         min_points_per_unit: int = MIN_POINTS_PER_UNIT) -> WaveFunction2D:
    """Maximally violating two-particle state for the interval problem.

    Built as ``2^-1/2 [exp(-i pi/4) e+ (x) e+ + e- (x) e-]`` where
    ``e+-`` equals the band-limited eigenfunction ``sqrt(2) P2 f`` times
    ``-i`` inside ``D1`` and ``+-1`` outside, then multiplied by the
    free-evolution phase ``exp(-i m (qA^2 + qB^2) / 2t)`` and normalized on
    the grid.  The state is stored in factored (rank-2) form.

    Raises
    ------
    ResolutionError
        If either grid has fewer than ``min_points_per_unit`` points per ``d1/2``.
    """
    for spec in (setup.grid_a, setup.grid_b):
        _check_resolution(spec, setup.d1, min_points_per_unit)
    ef = _half_eigenfunction(setup, n_nodes, u_tol)
    a = setup.phase_coefficient
    factors = []
    for spec in (setup.grid_a, setup.grid_b):
        q = spec.points
        ep, em = _e_pm(ef, q, setup.d1)
        ph = np.exp(-1j * a * q * q)
        factors.append((ep * ph, em * ph))
    (pa, ma), (pb, mb) = factors
    s = 1.0 / math.sqrt(2.0)
    terms = [(s * np.exp(-1j * np.pi / 4), pa, pb), (s, ma, mb)]
    meta = {"u": setup.u, "n": setup.n, "eigenvalue": ef.eigenvalue}
    return WaveFunction2D.from_terms(setup.grid_a, setup.grid_b, terms, meta=meta)


# Region table for the explicit amplitude: modulus factor and phase offset.
C0_SAME = math.sqrt(1 + 1 / math.sqrt(2))
C0_MIXED = math.sqrt(1 - 1 / math.sqrt(2))
PHI_PLUS = -math.atan(1 / (math.sqrt(2) + 1))   # -pi/8
PHI_MINUS = math.atan(1 / (math.sqrt(2) - 1))   # 3 pi/8


def interval_amplitude(q_a, q_b, setup: IntervalSetup, n_nodes: int = 64) -> np.ndarray:
    """Unnormalized amplitude ``C0 g(qA) g(qB) exp(i Theta)`` evaluated pointwise.

    ``g`` is the band-limited eigenfunction.  ``C0`` is ``sqrt(1 + 2^-1/2)``
    when both or neither coordinate lies in ``D1`` and ``sqrt(1 - 2^-1/2)``
    otherwise.  ``Theta`` is the region offset (``-pi/8`` both outside,
    ``7 pi/8`` both inside, ``3 pi/8 + pi/2`` mixed) minus the free-evolution
    term ``m (qA^2 + qB^2) / 2t``.  This is an independent route to the same
    state as :func:`build_interval_state` (equal up to normalization).
    """
    ef = prolate.eigenvector(prolate.build_hu(setup.u, n_nodes), setup.n)
    q_a = np.asarray(q_a, dtype=float)
    q_b = np.asarray(q_b, dtype=float)
    ga = ef.band_limited_extension(2 * q_a.ravel() / setup.d1).reshape(q_a.shape)
    gb = ef.band_limited_extension(2 * q_b.ravel() / setup.d1).reshape(q_b.shape)
    ia, ib = _inside(q_a, setup.d1), _inside(q_b, setup.d1)
    same = ia == ib
    c0 = np.where(same, C0_SAME, C0_MIXED)
    offset = np.where(same, np.where(ia, PHI_PLUS + np.pi, PHI_PLUS), PHI_MINUS + np.pi / 2)
    theta = offset - setup.phase_coefficient * (q_a**2 + q_b**2)
    return c0 * ga * gb * np.exp(1j * theta)


def discontinuity_ratio(q: np.ndarray, amp: np.ndarray, at: float) -> float:
    """Ratio of one-sided limits of ``amp`` at ``at``, inside over outside.

    Uses linear extrapolation from the two nearest samples on each side.
    ``at`` is taken positive; "inside" is the side closer to the origin.
    """
    q = np.asarray(q, dtype=float)
    amp = np.asarray(amp, dtype=float)
    left = np.flatnonzero(q < at)[-2:]
    right = np.flatnonzero(q > at)[:2]
    if left.size < 2 or right.size < 2:
        raise ValidationError("need two samples on each side of the discontinuity")

    def extrap(idx):
        x0, x1 = q[idx]
        y0, y1 = amp[idx]
        return y0 + (y1 - y0) * (at - x0) / (x1 - x0)

    return float(extrap(left) / extrap(right))


# --- evaluation ---------------------------------------------------------------


@dataclass(frozen=True)
class ChshReport:
    """Outcome of a CHSH evaluation with its provenance."""

    setup: dict
    expectation: float
    bound: float = TSIRELSON
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.expectation > self.bound + 1e-9:
            raise ValidationError(f"CHSH expectation {self.expectation} exceeds the bound {self.bound}")

    @property
    def deficit(self) -> float:
        return self.bound - self.expectation

    def to_dict(self) -> dict:
        out = asdict(self)
        out["deficit"] = self.deficit
        return out


def interval_settings(setup: IntervalSetup, full_momentum: bool = False):
    """Grid operators ``(A1, A2, B1, B2)``.

    ``A1 = 2 chi_D1(Q) - 1`` and ``A2 = U* (2 chi_[-k,k](P) - 1) U`` with
    ``U = exp(i m Q^2 / 2t)`` and ``k = (m/t) d2/2``.  With
    ``full_momentum`` the second set is the whole line, so ``A2 = 1``.
    """
    ops = []
    for spec in (setup.grid_a, setup.grid_b):
        half = 0.5 * setup.d1
        a1 = dichotomic_from_set(spec, "position", (-half, half))
        kappa = math.inf if full_momentum else setup.band_halfwidth
        m = dichotomic_from_set(spec, "momentum", (-kappa, kappa))
        a2 = conjugated(m, quadratic_phase(spec, setup.phase_coefficient))
        ops.append((a1, a2))
    (a1, a2), (b1, b2) = ops
    return a1, a2, b1, b2


def spectral_bound(setup: IntervalSetup, n_nodes: int = 64) -> float:
    """``beta(lam_n(u), lam_n(u))``: the best correlation reachable from the n-th eigenvalue."""
    lam = prolate.eigenvalue(setup.u, setup.n, n_nodes)
    return beta_surface(lam, lam)


def evaluate_interval_chsh(setup: IntervalSetup, n_nodes: int = 64, full_momentum: bool = False,
                           state: WaveFunction2D | None = None) -> ChshReport:
    """Build the interval state (unless given) and evaluate its CHSH correlation on the grid."""
    if state is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            state = build_interval_state(setup, n_nodes)
    a1, a2, b1, b2 = interval_settings(setup, full_momentum)
    val = chsh_expectation(state, a1, a2, b1, b2)
    lam = prolate.eigenvalue(setup.u, setup.n, n_nodes)
    diag = {
        "norm2": state.norm2(),
        "imag_residue": val.imag,
        "edge_mass": state.edge_mass(),
        "eigenvalue": lam,
        "eigenvalue_residual": abs(lam - 0.5),
        "spectral_bound": beta_surface(lam, lam),
        "grid_n": [setup.grid_a.n_points, setup.grid_b.n_points],
        "dx": [setup.grid_a.dx, setup.grid_b.dx],
    }
    return ChshReport(setup.describe(), val.value, TSIRELSON, diag)


# --- half-line states -----------------------------------------------------------

HALFLINE_COEFS = (np.exp(-1j * np.pi / 4) / (2 * math.sqrt(2)), 1.0 / (2 * math.sqrt(2)))


def halfline_factor(q: np.ndarray, eps: float, profile) -> np.ndarray:
    """``sqrt(eps) |q|^-1/2 f(eps ln|q|)``, set to 0 at ``q = 0``."""
    q = np.asarray(q, dtype=float)
    out = np.zeros(q.shape, dtype=complex)
    nz = q != 0
    aq = np.abs(q[nz])
    out[nz] = math.sqrt(eps) / np.sqrt(aq) * profile(eps * np.log(aq))
    return out


def halfline_log_factors(t: np.ndarray, eps: float, profile) -> tuple[np.ndarray, np.ndarray]:
    """Factors of the state in the logarithmic variable ``t = ln|q|``.

    The half-line state is ``sum_k c_k u_k (x) u_k`` with ``u_1 = phi`` and
    ``u_2 = Sign(q) phi``.  Multiplying by ``|q|^(1/2)`` and writing
    ``q = sign * exp(t)`` gives ``u_1 -> sqrt(eps) f(eps t)`` and
    ``u_2 -> sign * sqrt(eps) f(eps t)``.  Returned: the ``u_1`` factor and
    the ``u_2`` factor for positive ``q``.
    """
    v = math.sqrt(eps) * np.asarray(profile(eps * np.asarray(t, dtype=float)), dtype=complex)
    return v, v


def _check_eps(eps: float):
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")


def halfline_capture(eps: float, profile, spec: GridSpec) -> float:
    """Fraction of one particle's probability the grid can represent.

    The logarithmic variable ``s = eps ln|q|`` is resolved between
    ``ln(2 dx)`` and ``ln R`` with ``R`` the smaller grid half-width.
    """
    radius = min(-spec.x_min, spec.x_max)
    if radius <= 2 * spec.dx:
        return 0.0
    return profile.mass_between(eps * math.log(2 * spec.dx), eps * math.log(radius))


def _required_x_max(eps: float, profile, tail: float) -> float:
    lo, hi = profile.support()
    fn = lambda s: profile.mass_between(s, hi) - tail
    s_hi = brentq(fn, lo, hi, xtol=1e-10) if fn(lo) > 0 else lo
    return float(math.exp(min(s_hi / eps, 700.0)))


def halfline_state(eps: float, profile=None, spec: GridSpec | None = None, spec_b: GridSpec | None = None,
                   phase_coefficient: float = 0.0, min_mass: float = 0.99) -> WaveFunction2D:
    """Approximately maximally violating state for half-line settings.

    ``Psi(qA, qB) = (2 sqrt 2)^-1 (exp(-i pi/4) + Sign(qA qB)) phi(qA) phi(qB)``
    with ``phi(q) = sqrt(eps) |q|^-1/2 f(eps ln|q|)``, normalized on the
    grid.  A nonzero ``phase_coefficient`` ``a`` multiplies by
    ``exp(-i a (qA^2 + qB^2))``, giving the two-time representation with
    ``a = m / 2t``.

    Raises
    ------
    TruncationError
        If the grids capture less than ``min_mass`` of the probability.
    """
    _check_eps(eps)
    profile = as_profile(profile)
    profile.check_normalized()
    if spec is None:
        raise ValidationError("a grid is required")
    spec_b = spec if spec_b is None else spec_b
    captured = halfline_capture(eps, profile, spec) * halfline_capture(eps, profile, spec_b)
    if captured < min_mass:
        req = _required_x_max(eps, profile, 0.25 * (1 - min_mass))
        raise TruncationError(f"grid captures {captured:.4f} of the state (need {min_mass}); the state spreads "
                              f"over |q| up to about {req:.3g} and needs dx well below exp(s_min/eps)",
                              required_x_max=req)
    factors = []
    for sp in (spec, spec_b):
        q = sp.points
        phi = halfline_factor(q, eps, profile)
        ph = np.exp(-1j * phase_coefficient * q * q) if phase_coefficient else 1.0
        factors.append((phi * ph, np.where(q >= 0, 1.0, -1.0) * phi * ph))
    (ua, va), (ub, vb) = factors
    c1, c2 = HALFLINE_COEFS
    meta = {"eps": eps, "captured_mass": captured, "truncated_mass": 1.0 - captured}
    return WaveFunction2D.from_terms(spec, spec_b, [(c1, ua, ub), (c2, va, vb)], meta=meta)


def halfline_settings(spec: GridSpec, spec_b: GridSpec | None = None, phase_coefficient: float = 0.0):
    """``A1 = Sign(Q)`` and ``A2 = Sign(P)`` (conjugated by the free phase if given) for both sides."""
    out = []
    for sp in (spec, spec if spec_b is None else spec_b):
        a1 = dichotomic_from_set(sp, "position", (0.0, math.inf))
        a2 = dichotomic_from_set(sp, "momentum", (0.0, math.inf))
        if phase_coefficient:
            a2 = conjugated(a2, quadratic_phase(sp, phase_coefficient))
        out.extend([a1, a2])
    return tuple(out)


def halfline_grid_chsh(eps: float, profile=None, spec: GridSpec | None = None, **kw):
    """CHSH expectation of :func:`halfline_state` with half-line settings on the grid."""
    psi = halfline_state(eps, profile, spec, **kw)
    ops = halfline_settings(psi.spec_a, psi.spec_b, kw.get("phase_coefficient", 0.0))
    return chsh_expectation(psi, *ops)


def _log_grid(t_lo: float, t_hi: float, step: float) -> np.ndarray:
    n = max(int(math.ceil((t_hi - t_lo) / step)), 2) + 1
    return np.linspace(t_lo, t_hi, n)


def origin_weight_grid(eps: float, profile=None, a: float = 1.0, step: float | None = None) -> float:
    """``<Psi_eps | chi_[-a,a]^2(QA, QB) Psi_eps>`` by quadrature on a logarithmic grid.

    The state is evaluated through its amplitude in ``t = ln|q|`` on each
    of the four quadrants and integrated with the trapezoid rule, so very
    small ``eps`` (where the state extends over ``|q| ~ exp(-1/eps)``) stays
    representable.
    """
    _check_eps(eps)
    profile = as_profile(profile)
    if not a > 0:
        raise DomainError("a must be positive")
    s_lo, _ = profile.support()
    t_lo, t_hi = s_lo / eps, math.log(a)
    if t_hi <= t_lo:
        return 0.0
    if step is None:
        # A few hundred points per characteristic width of f(eps t).
        width = (profile.support()[1] - s_lo) / 40.0
        step = max(min(0.05, width / (eps * 100.0)), (t_hi - t_lo) / 2000.0)
    t = _log_grid(t_lo, t_hi, step)
    u1, u2 = halfline_log_factors(t, eps, profile)
    c1, c2 = HALFLINE_COEFS
    total = 0.0
    for sa in (1.0, -1.0):
        for sb in (1.0, -1.0):
            amp = c1 * np.outer(u1, u1) + c2 * sa * sb * np.outer(u2, u2)
            dens = np.abs(amp) ** 2
            total += trapezoid(trapezoid(dens, t, axis=1), t)
    return float(total)


def weight_at_origin(profile=None, check_eps: float | None = 1e-3, check_a=(0.5, 2.0), check_tol: float = 1e-2) -> float:
    """Limit weight at the origin, ``(int_{-inf}^0 |f|^2)^2``.

    With ``check_eps`` set, the finite-eps weight of ``[-a, a]^2`` is also
    computed for each ``a`` in ``check_a`` and must agree with the limit
    within ``check_tol`` (the limit does not depend on ``a``).
    """
    profile = as_profile(profile)
    profile.check_normalized()
    lo, _ = profile.support()
    w = profile.mass_between(lo, 0.0) ** 2
    if check_eps is not None:
        for a in check_a:
            est = origin_weight_grid(check_eps, profile, a)
            if abs(est - w) > check_tol:
                raise ConvergenceError(f"weight at [-{a},{a}]^2 for eps={check_eps} is {est:.6g}, "
                                       f"limit {w:.6g}", last_estimate=est)
    return float(w)
