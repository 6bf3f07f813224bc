"""Time-band limiting operator on an interval.

``H_u = chi_[-1,1](Q) chi_[-u,u](P) chi_[-1,1](Q)`` acts on ``L^2[-1, 1]``
as the integral operator with kernel ``sin(u (v - w)) / (pi (v - w))``.
It is discretized by a Gauss-Legendre Nystrom scheme; the kernel is entire
so convergence in the number of nodes is spectral.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, SolverError, ValidationError


def sinc_kernel(v, w, u: float) -> np.ndarray:
    """``K(v, w) = sin(u (v - w)) / (pi (v - w))`` with value ``u / pi`` on the diagonal."""
    d = np.subtract.outer(np.asarray(v, dtype=float), np.asarray(w, dtype=float))
    return (u / np.pi) * np.sinc(u * d / np.pi)


@lru_cache(maxsize=16)
def _gauss_legendre(n_nodes: int):
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True, eq=False)
class SincKernelOperator:
    """Symmetrized Nystrom matrix ``M_ij = sqrt(w_i) K(v_i, v_j) sqrt(w_j)``."""

    u: float
    n_nodes: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    matrix: np.ndarray = field(repr=False)

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues in descending order and matching eigenvectors of ``matrix``."""
        if not hasattr(self, "_eig"):
            lam, vec = np.linalg.eigh(self.matrix)
            object.__setattr__(self, "_eig", (lam[::-1].copy(), vec[:, ::-1].copy()))
        return self._eig

    def extend(self, samples, points) -> np.ndarray:
        """``sum_j w_j K(q, v_j) phi(v_j)`` at arbitrary real ``points``.

        For ``phi`` supported on [-1, 1] this is exactly the band-limited
        function ``(chi_[-u,u](P) phi)(q)``, evaluated on the whole line.
        """
        return sinc_kernel(points, self.nodes, self.u) @ (self.weights * np.asarray(samples))


def build_hu(u: float, n_nodes: int = 64) -> SincKernelOperator:
    """Nystrom discretization of ``H_u`` with ``n_nodes`` Gauss-Legendre nodes."""
    if not u > 0:
        raise DomainError(f"u must be positive, got {u}")
    if n_nodes < 16:
        raise ValidationError(f"n_nodes must be >= 16, got {n_nodes}")
    x, w = _gauss_legendre(int(n_nodes))
    sw = np.sqrt(w)
    m = sw[:, None] * sinc_kernel(x, x, u) * sw[None, :]
    m = 0.5 * (m + m.T)
    return SincKernelOperator(float(u), int(n_nodes), x, w, m)


def spectrum(op: SincKernelOperator, k: int) -> np.ndarray:
    """Top-``k`` eigenvalues in descending order."""
    if not 1 <= k <= op.n_nodes:
        raise ValidationError(f"k must be in [1, {op.n_nodes}], got {k}")
    return op.eigh()[0][:k].copy()


def eigenvalue(u: float, n: int, n_nodes: int = 64) -> float:
    return float(build_hu(u, n_nodes).eigh()[0][n])


@dataclass(frozen=True)
class Eigenfunction:
    """Eigenfunction of ``H_u`` sampled at the quadrature nodes.

    ``values`` are normalized so that ``sum w_i |psi(v_i)|^2 = 1``.
    """

    u: float
    n: int
    eigenvalue: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    parity_residual: float = 0.0
    gap: float = np.inf

    def __call__(self, v) -> np.ndarray:
        """Nystrom interpolation on [-1, 1]: ``psi(v) = lambda^-1 sum_j w_j K(v, v_j) psi_j``."""
        return self.band_limited_extension(v) / self.eigenvalue

    def band_limited_extension(self, q) -> np.ndarray:
        """``(chi_[-u,u](P) psi)(q)`` for any real ``q``."""
        return sinc_kernel(q, self.nodes, self.u) @ (self.weights * self.values)

    def sign_changes(self) -> int:
        s = np.sign(self.values[np.abs(self.values) > 1e-12 * np.max(np.abs(self.values))])
        return int(np.count_nonzero(s[1:] != s[:-1]))


def eigenvector(op: SincKernelOperator, n: int, parity_tol: float = 1e-8) -> Eigenfunction:
    """The ``n``-th eigenfunction, sign-fixed and parity-checked.

    The sign is chosen so the function is positive at the largest node
    where it is non-negligible.  The parity ``(-1)^n`` is verified.
    """
    if not 0 <= n < op.n_nodes:
        raise ValidationError(f"n must be in [0, {op.n_nodes}), got {n}")
    lam, vec = op.eigh()
    gap = min(abs(lam[n] - lam[n - 1]) if n > 0 else np.inf,
              abs(lam[n] - lam[n + 1]) if n + 1 < lam.size else np.inf)
    if gap < 1e-12:
        warnings.warn(f"eigenvalue {n} is nearly degenerate (gap {gap:.2e}); eigenvector is ill-defined",
                      RuntimeWarning, stacklevel=2)
    values = vec[:, n] / np.sqrt(op.weights)
    big = np.flatnonzero(np.abs(values) > 1e-8 * np.max(np.abs(values)))
    if values[big[-1]] < 0:
        values = -values
    # Gauss-Legendre nodes are symmetric: node i mirrors node N-1-i.
    parity = float(np.max(np.abs(values - (-1) ** n * values[::-1])))
    if parity > parity_tol * max(1.0, np.max(np.abs(values))):
        raise SolverError(f"eigenfunction {n} fails the parity check (residual {parity:.2e})", last_estimate=parity)
    return Eigenfunction(op.u, n, float(lam[n]), op.nodes, op.weights, values, parity, gap)


# --- curves and critical points -------------------------------------------------


@dataclass(frozen=True)
class SpectralCurve:
    """Top-``k`` eigenvalues of ``H_u`` over a range of ``u``."""

    u_samples: np.ndarray
    eigenvalue_rows: np.ndarray
    k: int

    def a3_norms(self) -> np.ndarray:
        lam = np.clip(self.eigenvalue_rows, 0.0, 1.0)
        return np.max(2 * np.sqrt(lam * (1 - lam)), axis=1)

    def ordering_violation(self) -> float:
        """Largest violation of ``1 > lam_0 > lam_1 > ... > 0`` (0 when strict)."""
        rows = self.eigenvalue_rows
        worst = max(0.0, float(np.max(rows - 1.0)), float(np.max(-rows)))
        if self.k > 1:
            worst = max(worst, float(np.max(rows[:, 1:] - rows[:, :-1])))
        return worst

    def monotonicity_violation(self) -> float:
        """Largest decrease of any ``lam_n`` between consecutive samples."""
        if len(self.u_samples) < 2:
            return 0.0
        return max(0.0, float(np.max(self.eigenvalue_rows[:-1] - self.eigenvalue_rows[1:])))


def spectral_curve(u_samples, k: int = 5, n_nodes: int = 64) -> SpectralCurve:
    u = np.asarray(u_samples, dtype=float)
    if u.ndim != 1 or u.size == 0 or np.any(u <= 0) or np.any(np.diff(u) <= 0):
        raise ValidationError("u_samples must be a nonempty increasing sequence of positive numbers")
    rows = np.array([spectrum(build_hu(x, n_nodes), k) for x in u])
    return SpectralCurve(u, rows, k)


def a3_norm_from_eigenvalues(lam) -> float:
    lam = np.clip(np.asarray(lam, dtype=float), 0.0, 1.0)
    return float(np.max(2 * np.sqrt(lam * (1 - lam))))


def a3_norm_curve(u_samples, n_nodes: int = 64, k: int | None = None) -> list[tuple[float, float]]:
    """``(u, ||A3||(u))`` with ``||A3|| = max 2 sqrt(lam (1 - lam))`` over computed eigenvalues.

    ``k=None`` uses the full discrete spectrum.
    """
    out = []
    for u in np.asarray(u_samples, dtype=float):
        if not u > 0:
            raise DomainError(f"u must be positive, got {u}")
        lam = build_hu(u, n_nodes).eigh()[0]
        if k is not None:
            lam = lam[:k]
        out.append((float(u), a3_norm_from_eigenvalues(lam)))
    return out


@dataclass(frozen=True)
class CriticalPoint:
    n: int
    u: float
    eigenvalue: float
    bracket_width: float

    @property
    def residual(self) -> float:
        return abs(self.eigenvalue - 0.5)


def critical_u(n: int, tol: float = 1e-6, n_nodes: int = 64, max_iter: int = 200) -> CriticalPoint:
    """Solve ``lam_n(u) = 1/2`` by bisection after a doubling bracket search.

    Returns a point with ``|lam_n(u) - 1/2| <= tol``.
    """
    if int(n) != n or n < 0:
        raise ValidationError(f"n must be a nonnegative integer, got {n}")
    if not tol > 0:
        raise ValidationError("tol must be positive")
    n = int(n)
    if n >= n_nodes:
        raise ValidationError(f"n must be below n_nodes={n_nodes}")

    def f(u):
        return eigenvalue(u, n, n_nodes) - 0.5

    lo, hi = 0.0, 1.0
    f_hi = f(hi)
    doublings = 0
    while f_hi < 0:
        lo, hi = hi, 2 * hi
        f_hi = f(hi)
        doublings += 1
        if doublings > 12:
            raise SolverError(f"could not bracket the crossing of lambda_{n} through 1/2", last_estimate=hi)
    mid, f_mid = hi, f_hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if abs(f_mid) <= tol:
            return CriticalPoint(n, mid, f_mid + 0.5, hi - lo)
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    raise SolverError(f"bisection for u_{n} did not reach tolerance {tol:g}", last_estimate=mid,
                      iterations=max_iter)


@dataclass(frozen=True)
class CriticalParameters:
    entries: tuple

    def to_json(self) -> dict:
        return {"entries": [{"n": e.n, "u": e.u, "eigenvalue": e.eigenvalue, "bracket_width": e.bracket_width}
                            for e in self.entries]}

    @classmethod
    def from_json(cls, obj) -> "CriticalParameters":
        return cls(tuple(CriticalPoint(int(e["n"]), float(e["u"]), float(e["eigenvalue"]), float(e["bracket_width"]))
                         for e in obj["entries"]))

    def is_increasing(self) -> bool:
        us = [e.u for e in self.entries]
        return all(b > a for a, b in zip(us, us[1:]))


def critical_parameters(n_max: int, tol: float = 1e-6, n_nodes: int = 64) -> CriticalParameters:
    return CriticalParameters(tuple(critical_u(n, tol, n_nodes) for n in range(n_max + 1)))
