"""Periodic position and momentum sets.

``g_v`` is the square wave of period ``v`` equal to +1 on ``v([0, 1/2) + Z)``
and -1 elsewhere.  With ``A1 = g_u(Q)`` and ``A2 = g_{2 pi}(P)`` the two
settings commute exactly when ``1/u`` is an integer, while for
``u = 1 + eps`` the commutator norm jumps to at least ``sqrt 2`` as
``eps -> 0``, giving a Bell correlation of ``sqrt 6``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigurationError, DomainError, ResolutionError, ValidationError
from .grid import GridSpec, PeriodicSet, a3_norm_grid, apply, dichotomic_from_set

_NORM = 1.0 / math.sqrt(2 * math.pi)


def square_wave(p, period: float = 2 * math.pi) -> np.ndarray:
    """``g_period(p)`` with boundary phases snapped to exact multiples of 1/2."""
    return np.where(PeriodicSet(period).indicator(np.asarray(p, dtype=float)), 1.0, -1.0)


def square_wave_closed_form(n) -> np.ndarray:
    """``c_n = -4i / (n sqrt(2 pi))`` for odd ``n``, 0 otherwise.

    Follows from integrating ``e^{-inp}`` over ``[0, pi]`` and ``[-pi, 0]``.
    """
    n = np.asarray(n)
    out = np.zeros(n.shape, dtype=complex)
    odd = (n % 2) != 0
    out[odd] = -4j * _NORM / n[odd]
    return out


@dataclass(frozen=True)
class SquareWaveSpectrum:
    """Coefficients ``c_n`` (``|n| <= max_n``) of ``g_{2 pi} = sum c_n e^{inp} / sqrt(2 pi)``."""

    max_n: int
    n: np.ndarray
    coefficients: np.ndarray

    def coefficient(self, k: int) -> complex:
        if abs(k) > self.max_n:
            raise ValidationError(f"|n| must be <= {self.max_n}")
        return complex(self.coefficients[k + self.max_n])

    def parseval_sum(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def antisymmetry_residual(self) -> float:
        return float(np.max(np.abs(self.coefficients + self.coefficients[::-1])))

    def even_residual(self) -> float:
        return float(np.max(np.abs(self.coefficients[self.n % 2 == 0])))


def square_wave_coeffs(max_n: int, nodes_per_panel: int = 24) -> SquareWaveSpectrum:
    """Coefficients by Gauss-Legendre quadrature on ``[0, pi]`` and ``[-pi, 0]``.

    Each half is split into ``max_n + 1`` panels, so every panel holds at
    most a quarter oscillation of ``e^{-inp}`` for ``|n| <= max_n``.
    """
    if int(max_n) != max_n or max_n < 1:
        raise ValidationError(f"max_n must be a positive integer, got {max_n}")
    max_n = int(max_n)
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    panels = max_n + 1
    edges = np.linspace(0.0, math.pi, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    p = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wp = (half[:, None] * w[None, :]).ravel()
    n = np.arange(-max_n, max_n + 1)
    # g = +1 on (0, pi), -1 on (-pi, 0); the second half is the mirror image.
    c = np.empty(n.size, dtype=complex)
    for start in range(0, n.size, 128):
        block = n[start:start + 128]
        phase = np.outer(block, p)
        # int_0^pi e^{-inp} dp - int_{-pi}^0 e^{-inp} dp = -2i int_0^pi sin(np) dp
        c[start:start + 128] = _NORM * ((np.exp(-1j * phase) - np.exp(1j * phase)) @ wp)
    return SquareWaveSpectrum(max_n, n, c)


def jump_partial_sum(eps: float, spectrum: SquareWaveSpectrum | None = None) -> tuple[float, int]:
    """``(2/pi) sum_{1 <= n < 1/(2 eps)} |c_n|^2`` and the number of terms.

    Coefficients come from ``spectrum`` when it is given and large enough,
    otherwise from the closed form (which the quadrature cross-checks).
    The sum is correctly rounded, so the result is exactly nonincreasing in eps.
    """
    n_hi = math.ceil(1.0 / (2.0 * eps)) - 1
    if n_hi < 1:
        return 0.0, 0
    if spectrum is not None and spectrum.max_n >= n_hi:
        c = spectrum.coefficients[spectrum.max_n + 1:spectrum.max_n + 1 + n_hi]
    else:
        c = square_wave_closed_form(np.arange(1, n_hi + 1))
    return 2.0 / math.pi * math.fsum(np.abs(c) ** 2), n_hi


@dataclass(frozen=True)
class JumpBound:
    eps: float
    bound: float
    bell: float
    n_terms: int

    @property
    def partial_sum(self) -> float:
        return self.bound**2


def jump_lower_bound(eps: float, max_n: int | None = None) -> JumpBound:
    """Lower bound on ``||[g_{2 pi}(P), g_{1+eps}(Q)]||`` and the implied Bell correlation.

    The bound is the square root of ``(2/pi) sum_{1 <= n < 1/(2 eps)} |c_n|^2``;
    the Bell value is ``2 sqrt(1 + (bound/2)^2)`` (both parties alike).
    """
    if not 0 < eps < 0.5:
        raise DomainError(f"eps must lie in (0, 1/2), got {eps}")
    spectrum = square_wave_coeffs(max_n) if max_n is not None else None
    total, n_terms = jump_partial_sum(eps, spectrum)
    bound = math.sqrt(total)
    return JumpBound(eps, bound, 2.0 * math.sqrt(1.0 + 0.25 * bound * bound), n_terms)


# --- grids and commutators ---------------------------------------------------------------


def _as_fraction(u: float, max_den: int = 10000) -> Fraction:
    fr = Fraction(u).limit_denominator(max_den)
    if abs(float(fr) - u) > 1e-12 * max(1.0, u):
        raise ConfigurationError(f"u = {u!r} is not a rational number with denominator <= {max_den}")
    return fr


def commensurate_grid(u: float, points_per_unit: int = 8, periods: int = 8) -> GridSpec:
    """Grid on ``[0, L)`` with ``L`` a common multiple of 1 and ``u`` and ``1/dx`` a multiple of ``1/u``.

    In units where the momentum period is ``2 pi`` the position grid has
    an integer length, so the momentum grid contains whole periods; an
    integer number of ``u``-periods fits as well, and each period holds an
    integer number of cells.  ``n_points`` is generally not a power of two.
    """
    fr = _as_fraction(u)
    p, q = fr.numerator, fr.denominator
    cells = q * points_per_unit
    length = p * periods
    n = cells * length
    return GridSpec(n, 0.0, float(length))


def default_grid(u: float, min_cells: int = 16, min_length: int = 16) -> GridSpec:
    """Smallest commensurate grid with at least ``min_cells`` per unit and length ``>= min_length``."""
    fr = _as_fraction(u)
    p, q = fr.numerator, fr.denominator
    return commensurate_grid(u, max(1, math.ceil(min_cells / q)), max(1, math.ceil(min_length / p)))


def _check_commensurate(u: float, spec: GridSpec):
    def is_int(x):
        return abs(x - round(x)) <= 1e-9 * max(1.0, abs(x))

    checks = {
        "grid length is an integer": spec.length,
        "grid length is a multiple of u": spec.length / u,
        "u is a multiple of dx": u / spec.dx,
        "1 is a multiple of dx": 1.0 / spec.dx,
    }
    bad = [name for name, val in checks.items() if not is_int(val)]
    if bad:
        raise ConfigurationError("incommensurate grid: " + "; ".join(bad))


def periodic_settings(u: float, spec: GridSpec):
    """``A1 = g_u(Q)`` and ``A2 = g_{2 pi}(P)`` as grid operators."""
    a1 = dichotomic_from_set(spec, "position", PeriodicSet(u))
    a2 = dichotomic_from_set(spec, "momentum", PeriodicSet(2 * math.pi))
    return a1, a2


def commutation_check(u: float, spec: GridSpec | None = None, tol: float = 1e-12, max_iter: int = 20000,
                      seed: int = 0) -> float:
    """``||(2i)^-1 [g_u(Q), g_{2 pi}(P)]||`` on a commensurate grid (power iteration).

    Raises
    ------
    ConfigurationError
        If the grid does not hold whole periods of both square waves.
    """
    if not u > 0:
        raise DomainError(f"u must be positive, got {u}")
    if spec is None:
        spec = default_grid(u)
    _check_commensurate(u, spec)
    a1, a2 = periodic_settings(u, spec)
    return a3_norm_grid(a1, a2, tol=tol, max_iter=max_iter, seed=seed)


def jump_scan(u_values, tol: float = 1e-12, seed: int = 0) -> list[tuple[float, float, int]]:
    """Rows ``(u, ||A3||, n_points)`` over a list of ``u``."""
    rows = []
    for u in u_values:
        spec = default_grid(u)
        rows.append((float(u), commutation_check(u, spec, tol=tol, seed=seed), spec.n_points))
    return rows


# --- test vector ------------------------------------------------------------------------


@dataclass(frozen=True)
class TestVector:
    """Unit grid vector supported in ``[0, eps)`` and its shift-sign pattern."""

    __test__ = False

    eps: float
    spec: GridSpec
    psi: np.ndarray
    signs: dict
    fixed_residual: float


def _shift(psi: np.ndarray, spec: GridSpec, n: int) -> np.ndarray:
    """``e^{inP} psi``, i.e. ``psi(x + n)``; exact cyclic roll since 1/dx is an integer."""
    k = int(round(n / spec.dx))
    return np.roll(psi, -k)


def test_vector_construction(eps: float, spec: GridSpec, margin: int = 1) -> TestVector:
    """Build a smooth unit vector in ``[0, eps)`` and check the signs of its integer shifts.

    ``g_{1+eps}(Q) psi = psi`` must hold exactly, and for integer ``n`` the
    shifted vector ``e^{inP} psi`` (supported in ``[-n, -n + eps)``) must be
    an eigenvector of ``g_{1+eps}(Q)`` with eigenvalue ``+1`` for
    ``0 <= n < (1/eps - 1)/2`` and ``-1`` for ``-(1 + 1/eps)/2 < n < 0``.
    Indices within ``margin`` of either limit are skipped.

    Raises
    ------
    ResolutionError
        If ``[0, eps)`` holds fewer than 8 grid points.
    """
    if not 0 < eps < 0.5:
        raise DomainError(f"eps must lie in (0, 1/2), got {eps}")
    u = 1.0 + eps
    _check_commensurate(u, spec)
    x = spec.points
    inside = (x >= 0) & (x < eps)
    if np.count_nonzero(inside) < 8:
        raise ResolutionError(f"[0, {eps}) contains {np.count_nonzero(inside)} grid points; need at least 8")
    t = np.where(inside, (x - 0.5 * eps + 0.5 * spec.dx) / (0.5 * eps), 0.0)
    psi = np.where(inside, np.exp(-1.0 / np.maximum(1.0 - t * t, 1e-300)), 0.0).astype(complex)
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * spec.dx)

    a1, _ = periodic_settings(u, spec)
    fixed = float(np.max(np.abs(apply(a1, psi) - psi)))
    if fixed > 1e-12:
        raise ValidationError(f"test vector is not fixed by g_(1+eps)(Q): residual {fixed:.2e}")

    n_pos = math.ceil(0.5 * (1.0 / eps - 1.0)) - 1 - margin
    n_neg = -(math.ceil(0.5 * (1.0 + 1.0 / eps)) - 1 - margin)
    signs = {}
    for n in list(range(n_neg, 0)) + list(range(0, n_pos + 1)):
        shifted = _shift(psi, spec, n)
        image = apply(a1, shifted)
        if np.max(np.abs(image - shifted)) <= 1e-12:
            signs[n] = 1
        elif np.max(np.abs(image + shifted)) <= 1e-12:
            signs[n] = -1
        else:
            signs[n] = 0
    return TestVector(eps, spec, psi, signs, fixed)


test_vector_construction.__test__ = False


def commutator_on_test_vector(tv: TestVector) -> float:
    """``||[A2, A1] psi||^2`` for the test vector, with ``A1 = g_{1+eps}(Q)``, ``A2 = g_{2 pi}(P)``."""
    a1, a2 = periodic_settings(1.0 + tv.eps, tv.spec)
    comm = apply(a2, apply(a1, tv.psi)) - apply(a1, apply(a2, tv.psi))
    return float(np.sum(np.abs(comm) ** 2) * tv.spec.dx)


def test_vector_grid(eps: float, points_per_unit: int | None = None, periods: int = 4) -> GridSpec:
    """Commensurate grid for ``u = 1 + eps`` with enough points inside ``[0, eps)``."""
    fr = _as_fraction(1.0 + eps)
    if points_per_unit is None:
        points_per_unit = max(1, math.ceil(8.0 / (eps * fr.denominator)))
    return commensurate_grid(1.0 + eps, points_per_unit, periods)


test_vector_grid.__test__ = False
