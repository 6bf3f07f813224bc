"""Half-line settings: ``A1 = Sign(Q)`` and ``A2 = Sign(P)``.

The pair is diagonalized by the dilation group.  In the diagonal variable
``eta`` the settings become ``1 (x) s1`` and
``tanh(pi eta/2) (x) s1 + sech(pi eta/2) (x) s2``, so
``H = P1 P2 P1`` acts as ``(1 + tanh(pi eta / 2)) / 2``.  The value 1/2 sits
at ``eta = 0`` in the continuous spectrum: maximal violation is approached
by states concentrating there, never attained.

Conventions used throughout:

* A profile ``f`` gives the approximate eigenvector
  ``f_eps(x) = i sqrt(eps / x) f(eps ln x)`` on ``x > 0``.
* Its diagonal-variable counterpart is ``g_eps(eta) = (2 eps)^-1/2 g(eta / 2 eps)``
  where ``g`` is the unitary Fourier transform of ``f``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .chsh import (
    HALFLINE_COEFS,
    TSIRELSON,
    _check_eps,
    halfline_capture,
    halfline_factor,
    halfline_log_factors,
)
from .errors import IntegrationError, TruncationError, ValidationError
from .grid import GridSpec, apply, momentum_mask, position_mask
from .profiles import AnnulusBump, Profile, as_profile


# --- diagonal representation -------------------------------------------------------


def tanh_sech(eta):
    """``(tanh(pi eta / 2), sech(pi eta / 2))``."""
    x = 0.5 * np.pi * np.asarray(eta, dtype=float)
    return np.tanh(x), 1.0 / np.cosh(x)


@dataclass(frozen=True)
class DiagonalizedSettings:
    """Settings as 2x2-matrix-valued functions of ``eta``."""

    def a1(self, eta) -> np.ndarray:
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        out = np.zeros(eta.shape + (2, 2), dtype=complex)
        out[..., 0, 1] = out[..., 1, 0] = 1.0
        return out

    def a2(self, eta) -> np.ndarray:
        t, s = tanh_sech(np.atleast_1d(eta))
        out = np.zeros(t.shape + (2, 2), dtype=complex)
        out[..., 0, 1] = t - 1j * s
        out[..., 1, 0] = t + 1j * s
        return out

    def h(self, eta) -> np.ndarray:
        """Multiplier of ``H`` in the diagonal representation."""
        return 0.5 * (1.0 + tanh_sech(eta)[0])

    def square_residual(self, eta) -> float:
        """``max |tanh^2 + sech^2 - 1|`` on the given points."""
        t, s = tanh_sech(eta)
        return float(np.max(np.abs(t * t + s * s - 1.0)))


# --- Fourier integrals --------------------------------------------------------------

_SPLIT = 1.0
_CUTOFF = 45.0


def _sech(x):
    e = np.exp(-x)
    return 2 * e / (1 + e * e)


def _csch(x):
    e = np.exp(-x)
    return 2 * e / (1 - e * e)


def _sin_over_sinh(lam, eta):
    if lam < 1e-4:
        # sin(eta l)/sinh(l) = eta (1 - (eta^2 + 1) l^2 / 6 + O(l^4)).
        return eta * (1.0 - (eta * eta + 1.0) * lam * lam / 6.0)
    return math.sin(eta * lam) * _csch(lam)


def _quad(fn, a, b, tol, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(fn, a, b, epsabs=1e-15, epsrel=1e-13, limit=400, **kw)
    if err > tol:
        raise IntegrationError(f"quadrature error estimate {err:.2e} exceeds {tol:.0e}", last_estimate=val)
    return val, err


def appendix_kernel_integrals(eta: float, tol: float = 1e-10) -> tuple[float, float]:
    """``(2/pi) int_0^inf cos(eta l)/cosh l dl`` and ``(2/pi) int_0^inf sin(eta l)/sinh l dl``.

    The closed forms are ``sech(pi eta/2)`` and ``tanh(pi eta/2)``.  The
    range is split at ``l = 1``: below it the integrands are integrated
    directly (the sine kernel via its series near 0); above it the
    oscillatory factor is handled by QAWO weights.  The tail beyond
    ``l = 45`` is below 1e-19 and dropped.
    """
    eta = float(eta)
    if not abs(eta) <= 50:
        raise ValidationError(f"|eta| must be <= 50, got {eta}")
    c0, _ = _quad(lambda l: math.cos(eta * l) * _sech(l), 0.0, _SPLIT, tol)
    s0, _ = _quad(lambda l: _sin_over_sinh(l, eta), 0.0, _SPLIT, tol)
    if eta == 0.0:
        c1, _ = _quad(_sech, _SPLIT, _CUTOFF, tol)
        s1 = 0.0
    else:
        c1, _ = _quad(_sech, _SPLIT, _CUTOFF, tol, weight="cos", wvar=eta)
        s1, _ = _quad(_csch, _SPLIT, _CUTOFF, tol, weight="sin", wvar=eta)
    return 2.0 / np.pi * (c0 + c1), 2.0 / np.pi * (s0 + s1)


def appendix_table(etas) -> np.ndarray:
    """Rows ``(eta, tanh, sech, offdiag_quad, diag_quad)``."""
    rows = []
    for eta in np.asarray(etas, dtype=float):
        off, diag = appendix_kernel_integrals(eta)
        t, s = tanh_sech(eta)
        rows.append((eta, float(t), float(s), off, diag))
    return np.array(rows)


# --- log-coordinate map ----------------------------------------------------------------


@dataclass(frozen=True)
class LogCoordinateMap:
    """``(U phi)(l) = sqrt(2) exp(l) phi(exp(2 l))`` on a uniform grid ``[-L, L]``.

    ``U`` is unitary from ``L^2(0, inf)`` onto ``L^2(R)``.  The target grid
    resolves source functions supported in ``[exp(-2L), exp(2L)]``.
    """

    lam_max: float
    n_lambda: int = 8193

    def __post_init__(self):
        if not self.lam_max > 0 or self.n_lambda < 16:
            raise ValidationError("need lam_max > 0 and n_lambda >= 16")

    @classmethod
    def for_eps(cls, eps: float, n_lambda: int = 8193) -> "LogCoordinateMap":
        """Map with ``L = 5 / eps``, enough for ``f_eps`` whose log-support scales as ``1/eps``."""
        _check_eps(eps)
        return cls(5.0 / eps, n_lambda)

    @property
    def lambdas(self) -> np.ndarray:
        return np.linspace(-self.lam_max, self.lam_max, self.n_lambda)

    def forward(self, phi) -> np.ndarray:
        lam = self.lambdas
        with np.errstate(over="ignore", under="ignore"):
            x = np.exp(2 * lam)
            return math.sqrt(2.0) * np.exp(lam) * np.asarray(phi(x))

    def inverse(self, samples, x) -> np.ndarray:
        """Source function at points ``x > 0`` from target samples (linear interpolation)."""
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValidationError("inverse map is defined on x > 0")
        lam = 0.5 * np.log(x)
        samples = np.asarray(samples)
        re = np.interp(lam, self.lambdas, samples.real, left=0.0, right=0.0)
        im = np.interp(lam, self.lambdas, np.imag(samples), left=0.0, right=0.0)
        return (re + 1j * im) / (math.sqrt(2.0) * np.sqrt(x))

    def norm(self, samples) -> float:
        return math.sqrt(integrate.trapezoid(np.abs(samples) ** 2, self.lambdas))


def isometry_residual(cmap: LogCoordinateMap, phi, support: tuple[float, float]) -> float:
    """``| ||U phi|| - ||phi|| |`` for ``phi`` supported in ``support`` inside (0, inf)."""
    a, b = support
    if not 0 < a < b:
        raise ValidationError("support must lie in (0, inf)")
    if a < math.exp(-2 * cmap.lam_max) or b > math.exp(2 * cmap.lam_max):
        raise TruncationError("test function support exceeds the log grid",
                              required_x_max=b)
    src, _ = integrate.quad(lambda x: abs(phi(np.array([x]))[0]) ** 2, a, b, epsabs=1e-14, epsrel=1e-12,
                            limit=400)
    return abs(cmap.norm(cmap.forward(phi)) - math.sqrt(src))


# --- semi-analytic CHSH ------------------------------------------------------------------


def _profile_average(profile: Profile, fn) -> float:
    lo, hi = profile.support()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(lambda x: abs(profile(x)) ** 2 * fn(x), lo, hi, epsabs=1e-15, epsrel=1e-13,
                                limit=400, points=[0.0] if lo < 0 < hi else None)
    return float(val)


def diagonal_averages(eps: float, g_profile=None) -> tuple[float, float]:
    """``<tanh(pi eta/2)>`` and ``<sech(pi eta/2)>`` in the state ``|g_eps|^2``.

    With ``eta = 2 eps x`` the averages become integrals of ``|g(x)|^2``
    against ``tanh(pi eps x)`` and ``sech(pi eps x)``.
    """
    _check_eps(eps)
    g = as_profile(g_profile)
    t = _profile_average(g, lambda x: math.tanh(math.pi * eps * x))
    s = _profile_average(g, lambda x: float(_sech(abs(math.pi * eps * x))))
    return t, s


def semi_analytic_chsh(eps: float, g_profile=None) -> float:
    """CHSH correlation of the half-line state built from ``g_eps``.

    In the diagonal representation both parties' settings are 2x2 matrix
    multipliers and the state is a product in ``eta``, so the correlation
    reduces to the two averages ``t = <tanh>`` and ``s = <sech>``:
    ``(1 + 2t + 2s - t^2 - 2ts + s^2) / sqrt(2)``.  For symmetric ``g`` this
    is ``(1 + s)^2 / sqrt(2)``, which tends to ``2 sqrt(2)`` as ``eps -> 0``.
    """
    t, s = diagonal_averages(eps, g_profile)
    return (1.0 + 2 * t + 2 * s - t * t - 2 * t * s + s * s) / math.sqrt(2.0)


def multiplier_expectation(eps: float, g_profile=None) -> float:
    """``<g_eps| (1 + tanh(pi eta/2))/2 |g_eps>``, the expectation of ``H``."""
    return 0.5 * (1.0 + diagonal_averages(eps, g_profile)[0])


def multiplier_residual(eps: float, g_profile=None) -> float:
    """``|| (H - 1/2) g_eps || = || tanh(pi eta/2) g_eps || / 2``."""
    _check_eps(eps)
    g = as_profile(g_profile)
    return 0.5 * math.sqrt(_profile_average(g, lambda x: math.tanh(math.pi * eps * x) ** 2))


def chsh_deficit_exponent(eps_values, g_profile=None) -> float:
    """Slope of ``log(2 sqrt 2 - <T>)`` against ``log eps`` (least squares)."""
    eps = np.asarray(eps_values, dtype=float)
    deficit = np.array([TSIRELSON - semi_analytic_chsh(e, g_profile) for e in eps])
    if np.any(deficit <= 0):
        raise ValidationError("deficit must be positive to fit an exponent")
    return float(np.polyfit(np.log(eps), np.log(deficit), 1)[0])


# --- grid checks of the tanh relation ---------------------------------------------------


def approximate_eigenvector(eps: float, spec: GridSpec, profile=None, min_mass: float = 0.99) -> np.ndarray:
    """``f_eps(x) = i sqrt(eps / x) f(eps ln x)`` for ``x > 0`` on the grid (zero elsewhere)."""

    _check_eps(eps)
    profile = as_profile(profile)
    captured = halfline_capture(eps, profile, spec)
    if captured < min_mass:
        req = math.exp(min(profile.support()[1] / eps, 700.0))
        raise TruncationError(f"grid captures {captured:.4f} of f_eps (need {min_mass})", required_x_max=req)
    x = spec.points
    return np.where(x > 0, 1j * halfline_factor(x, eps, profile), 0.0)


def _half_line_h(spec: GridSpec):
    pq = position_mask(spec, (0.0, math.inf))
    pp = momentum_mask(spec, (0.0, math.inf))
    return lambda v: apply(pq, apply(pp, apply(pq, v)))


def tanh_relation_residual(eps: float, spec: GridSpec, profile=None) -> float:
    """``||H f_eps - f_eps / 2|| / ||f_eps||`` with ``H = chi+(Q) chi+(P) chi+(Q)`` on the grid."""
    f = approximate_eigenvector(eps, spec, profile)
    hf = _half_line_h(spec)(f)
    return float(np.linalg.norm(hf - 0.5 * f) / np.linalg.norm(f))


def grid_h_expectation(eps: float, spec: GridSpec, profile=None) -> float:
    """``<f_eps|H f_eps> / ||f_eps||^2`` on the grid."""
    f = approximate_eigenvector(eps, spec, profile)
    hf = _half_line_h(spec)(f)
    return float(np.vdot(f, hf).real / np.vdot(f, f).real)


# --- momentum representation -----------------------------------------------------------


def momentum_profiles(eps: float, profile=None, s=None):
    """``G+(s)``, ``G-(s)``: the Fourier transform of ``phi(q) = sqrt(eps) q^-1/2 f(eps ln q)`` on ``q > 0``.

    For ``p`` of sign ``+-`` the transform is ``|p|^-1/2 sqrt(eps) G+-(eps ln|p|)``
    with ``G+-(s) = (2 pi)^-1 int F(k) Gamma(1/2 + i eps k) exp(-+i pi/4 +- pi eps k / 2 - i k s) dk``
    and ``F`` the unitary Fourier transform of ``f``.  Returns ``(s, G+, G-)``.
    """
    _check_eps(eps)
    profile = as_profile(profile)
    lo, hi = profile.support()
    if s is None:
        s = np.linspace(lo - 10.0, hi + 10.0, 2001)
    s = np.asarray(s, dtype=float)
    # F(k) by direct quadrature on a uniform grid over the support of f.
    xs = np.linspace(lo, hi, 4001)
    dx = xs[1] - xs[0]
    wx = np.full(xs.size, dx)
    wx[0] = wx[-1] = 0.5 * dx
    wfx = wx * np.asarray(profile(xs), dtype=complex) / math.sqrt(2 * np.pi)

    def transform(k):
        return np.exp(-1j * np.outer(k, xs)) @ wfx

    # Trim the k-range to where F is non-negligible, then sample finely
    # enough that exp(-i k s) is not aliased over the requested s-range.
    probe = np.linspace(-np.pi / dx, np.pi / dx, 4001)
    mag = np.abs(transform(probe))
    big = probe[mag > 1e-12 * mag.max()]
    kmax = max(abs(big[0]), abs(big[-1])) + 1.0
    span = 2.0 * max(abs(s[0]), abs(s[-1])) + 1.0
    dk = min(0.02, np.pi / span)
    k = np.arange(-kmax, kmax + dk, dk)
    fk = transform(k)
    lg = special.loggamma(0.5 + 1j * eps * k)
    out = []
    for sign in (1.0, -1.0):
        w = fk * np.exp(lg - 1j * sign * np.pi / 4 + sign * np.pi * eps * k / 2)
        out.append((np.exp(-1j * np.outer(s, k)) @ w) * dk / (2 * np.pi))
    return s, out[0], out[1]


def _momentum_log_factors(eps, profile):
    s_grid, gp, gm = momentum_profiles(eps, profile)
    a = gp + gm
    b = gp - gm

    def factors(t):
        st = eps * np.asarray(t, dtype=float)
        ua = np.interp(st, s_grid, a.real, left=0, right=0) + 1j * np.interp(st, s_grid, a.imag, left=0, right=0)
        ub = np.interp(st, s_grid, b.real, left=0, right=0) + 1j * np.interp(st, s_grid, b.imag, left=0, right=0)
        return math.sqrt(eps) * ua, math.sqrt(eps) * ub

    return factors, (s_grid[0], s_grid[-1])


# --- dilation-invariance diagnostic ------------------------------------------------------


def _annulus_expectation(factors, s_range, eps, bump: AnnulusBump, fine: float = 0.01, coarse: float = 0.05):
    """``<Psi| bump(qA, qB) |Psi>`` from log-coordinate factors on all four quadrants.

    The bump vanishes unless ``max(|qA|, |qB|) >= r1 / sqrt 2``, so the
    integral splits into two strips where one coordinate lies in the
    annulus band (fine grid) and the other ranges over the whole support
    (coarse grid), minus their overlap.
    """
    band = _log_band(bump, fine)
    t_lo = min(s_range[0] / eps, band[0])
    t_hi = math.log(bump.r2)
    wide = np.union1d(np.arange(t_lo, band[0], coarse), band)
    wide = wide[wide <= t_hi]
    c1, c2 = HALFLINE_COEFS

    def block(ta, tb):
        ua1, ua2 = factors(ta)
        ub1, ub2 = factors(tb)
        r = np.hypot(np.exp(ta)[:, None], np.exp(tb)[None, :])
        wgt = _radial(bump, r)
        total = 0.0
        for sa in (1.0, -1.0):
            for sb in (1.0, -1.0):
                amp = c1 * np.outer(ua1, ub1) + c2 * sa * sb * np.outer(ua2, ub2)
                total += integrate.trapezoid(integrate.trapezoid(wgt * np.abs(amp) ** 2, tb, axis=1), ta)
        return total

    # strip A (qA in band, qB anywhere) + strip B - overlap (both in band); the
    # pieces below the band share the edge point, which the trapezoid weights handle.
    below = wide[wide <= band[0]]
    return block(band, wide) + block(below, band)


def _log_band(bump: AnnulusBump, step: float) -> np.ndarray:
    lo = math.log(bump.r1 / math.sqrt(2.0)) - 0.05
    hi = math.log(bump.r2)
    return _lin(lo, hi, step)


def _lin(lo, hi, step):
    n = max(int(math.ceil((hi - lo) / step)), 2) + 1
    return np.linspace(lo, hi, n)


def _radial(bump: AnnulusBump, r):
    return bump(r, np.zeros_like(r))


def dilation_invariance_diagnostic(eps_values, profile=None, observable=None,
                                   representation: str = "position") -> list[float]:
    """``<Psi_eps| b(QA, QB) |Psi_eps>`` (or with momenta) for each eps.

    ``observable`` must be an :class:`AnnulusBump`: a continuous function
    vanishing at the origin and at infinity.  As eps decreases the state's
    mass escapes to the origin and to infinity, so the values tend to 0.
    """
    if observable is None:
        observable = AnnulusBump()
    if not isinstance(observable, AnnulusBump):
        raise ValidationError("observable must vanish at the origin and at infinity (use AnnulusBump)")
    if representation not in ("position", "momentum"):
        raise ValidationError("representation must be 'position' or 'momentum'")
    profile = as_profile(profile)
    out = []
    for eps in eps_values:
        _check_eps(eps)
        if representation == "position":
            factors = lambda t, e=eps: halfline_log_factors(t, e, profile)
            s_range = profile.support()
        else:
            factors, s_range = _momentum_log_factors(eps, profile)
        out.append(float(_annulus_expectation(factors, s_range, eps, observable)))
    return out


def sweep(eps_values, g_profile=None) -> np.ndarray:
    """Rows ``(eps, <T>, residual)`` of the semi-analytic convergence table."""
    return np.array([(e, semi_analytic_chsh(e, g_profile), multiplier_residual(e, g_profile)) for e in eps_values])
