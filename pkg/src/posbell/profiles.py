"""One-dimensional profile functions used to build approximate eigenvectors.

A profile is a square-integrable function on the real line, evaluated on
arrays.  The half-line constructions feed a profile ``f`` through the
logarithmic substitution ``s = eps * ln|q|``, so only its values and its
mass distribution matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import ValidationError


class Profile:
    """Base class. Subclasses implement ``__call__`` and ``support``."""

    def __call__(self, s):
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        """Interval outside which the profile carries negligible mass (< 1e-16)."""
        raise NotImplementedError

    def mass_between(self, lo: float, hi: float) -> float:
        """Return the integral of |f|^2 over [lo, hi]."""
        a, b = self.support()
        lo, hi = max(lo, a), min(hi, b)
        if hi <= lo:
            return 0.0
        val, _ = integrate.quad(lambda s: abs(self(s)) ** 2, lo, hi, limit=200, epsabs=1e-14, epsrel=1e-12)
        return float(val)

    def norm2(self) -> float:
        a, b = self.support()
        return self.mass_between(a, b)

    def check_normalized(self, tol: float = 1e-6) -> None:
        n2 = self.norm2()
        if abs(n2 - 1.0) > tol:
            raise ValidationError(f"profile is not unit-normalized: integral of |f|^2 = {n2:.10g}")


@dataclass(frozen=True)
class GaussianProfile(Profile):
    """Gaussian amplitude whose density |f|^2 is normal with mean ``center`` and sd ``width``.

    ``frequency`` adds a plane-wave factor ``exp(i k s)``.
    """

    center: float = 0.0
    width: float = 1.0
    frequency: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValidationError("Gaussian width must be positive")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        amp = (2 * np.pi * self.width**2) ** -0.25 * np.exp(-((s - self.center) ** 2) / (4 * self.width**2))
        if self.frequency:
            return amp * np.exp(1j * self.frequency * s)
        return amp

    def support(self):
        half = 20.0 * self.width
        return (self.center - half, self.center + half)

    def mass_between(self, lo, hi):
        z = lambda x: (x - self.center) / (self.width * math.sqrt(2))
        if lo >= self.center:
            return 0.5 * (special.erfc(z(lo)) - special.erfc(z(hi)))
        if hi <= self.center:
            return 0.5 * (special.erfc(-z(hi)) - special.erfc(-z(lo)))
        return 0.5 * (special.erf(z(hi)) - special.erf(z(lo)))

    def norm2(self):
        return 1.0

    def fourier(self) -> "GaussianProfile":
        """Profile of the unitary Fourier transform, up to a constant phase.

        With ``F(k) = (2 pi)^(-1/2) int f(s) exp(-i k s) ds`` the transform of
        a Gaussian centred at ``c`` with width ``w`` and frequency ``k0`` is a
        Gaussian centred at ``k0`` with width ``1/(2w)`` and frequency ``-c``.
        """
        return GaussianProfile(center=self.frequency, width=0.5 / self.width, frequency=-self.center)


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@dataclass(frozen=True)
class BumpProfile(Profile):
    """Smooth compactly supported profile on the open interval (lo, hi), unit-normalized."""

    lo: float = -1.0
    hi: float = 1.0
    _scale: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValidationError("bump profile needs lo < hi")
        half = 0.5 * (self.hi - self.lo)
        n2, _ = integrate.quad(lambda t: _bump(t) ** 2, -1, 1, epsabs=1e-15, epsrel=1e-13)
        object.__setattr__(self, "_scale", 1.0 / math.sqrt(n2 * half))

    def __call__(self, s):
        mid = 0.5 * (self.lo + self.hi)
        half = 0.5 * (self.hi - self.lo)
        return self._scale * _bump((np.asarray(s, dtype=float) - mid) / half)

    def support(self):
        return (self.lo, self.hi)


@dataclass(frozen=True)
class SampledProfile(Profile):
    """Profile given by samples, linearly interpolated and zero outside the sample range."""

    s: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if s.ndim != 1 or s.shape != v.shape or s.size < 2:
            raise ValidationError("sampled profile needs matching 1D arrays of length >= 2")
        if np.any(np.diff(s) <= 0):
            raise ValidationError("sample points must be strictly increasing")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "values", v)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        re = np.interp(s, self.s, self.values.real, left=0.0, right=0.0)
        im = np.interp(s, self.s, self.values.imag, left=0.0, right=0.0)
        if not np.any(self.values.imag):
            return re
        return re + 1j * im

    def support(self):
        return (float(self.s[0]), float(self.s[-1]))

    def mass_between(self, lo, hi):
        a, b = max(lo, self.s[0]), min(hi, self.s[-1])
        if b <= a:
            return 0.0
        # Dense resampling; the interpolant is piecewise linear so this is accurate.
        t = np.linspace(a, b, 20001)
        return float(integrate.trapezoid(np.abs(self(t)) ** 2, t))


@dataclass(frozen=True)
class AnnulusBump:
    """Smooth function of the radius, supported on r1 < |(qA, qB)| < r2, peak value 1.

    Used as the observable in dilation-invariance diagnostics: it is
    continuous and vanishes both at the origin and at infinity.
    """

    r1: float = 0.5
    r2: float = 2.0

    def __post_init__(self):
        if not 0 < self.r1 < self.r2:
            raise ValidationError("annulus bump needs 0 < r1 < r2")

    def __call__(self, qa, qb):
        r = np.hypot(qa, qb)
        mid = 0.5 * (self.r1 + self.r2)
        half = 0.5 * (self.r2 - self.r1)
        return _bump((r - mid) / half) * math.e


def as_profile(obj) -> Profile:
    """Coerce a profile descriptor: a Profile, a name, or None for the default Gaussian."""
    if obj is None:
        return GaussianProfile()
    if isinstance(obj, Profile):
        return obj
    if isinstance(obj, str):
        if obj == "gaussian":
            return GaussianProfile()
        if obj == "bump":
            return BumpProfile()
        raise ValidationError(f"unknown profile name {obj!r}")
    raise ValidationError(f"cannot interpret {obj!r} as a profile")
