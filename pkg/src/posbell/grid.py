"""Discretized one- and two-particle wavefunctions.

Positions live on a uniform grid ``x_j = x_min + j dx`` with
``dx = (x_max - x_min) / n``.  Momenta are the discrete Fourier dual
``p = 2 pi fftfreq(n, dx)`` (units with hbar = 1).  Momentum masks act by
conjugation with the unitary FFT; the phase from ``x_min`` cancels in that
conjugation, so masks may be applied directly in FFT order.

Amplitudes are stored as continuum values: the norm of a one-particle
vector is ``sum |psi_j|^2 dx``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, ShapeError, ValidationError

SNAP_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid of ``n_points`` cells covering ``[x_min, x_max)``."""

    n_points: int
    x_min: float
    x_max: float

    def __post_init__(self):
        n = self.n_points
        if isinstance(n, bool) or int(n) != n:
            raise ValidationError(f"n_points must be an integer, got {n!r}")
        if n < 16:
            raise ValidationError(f"n_points must be >= 16, got {n}")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)) or not self.x_min < self.x_max:
            raise ValidationError(f"need finite x_min < x_max, got {self.x_min}, {self.x_max}")
        object.__setattr__(self, "n_points", int(n))
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))

    @classmethod
    def centered(cls, n_points: int, dx: float, cell_centered: bool = True) -> "GridSpec":
        """Grid symmetric about 0 with spacing ``dx``.

        With ``cell_centered`` the points are ``(j - n/2 + 1/2) dx`` so that
        integer multiples of ``dx`` fall on cell boundaries rather than on
        points; otherwise the points are ``(j - n/2) dx``.
        """
        shift = 0.5 if cell_centered else 0.0
        x_min = (-(n_points // 2) + shift) * dx
        return cls(n_points, x_min, x_min + n_points * dx)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def dp(self) -> float:
        return 2 * np.pi / self.length

    @cached_property
    def points(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_points) * self.dx

    @cached_property
    def fft_momenta(self) -> np.ndarray:
        """Momenta in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, self.dx)

    @property
    def momenta(self) -> np.ndarray:
        """Momenta in increasing (centered) order."""
        return np.fft.fftshift(self.fft_momenta)

    def to_json(self) -> dict:
        return {"n": self.n_points, "x_min": self.x_min, "x_max": self.x_max}

    @classmethod
    def from_json(cls, obj) -> "GridSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(int(obj["n"]), float(obj["x_min"]), float(obj["x_max"]))


# --- sets -----------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    """Closed interval; infinite ends allowed."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValidationError(f"empty interval [{self.lo}, {self.hi}]")

    def indicator(self, x: np.ndarray) -> np.ndarray:
        return (x >= self.lo) & (x <= self.hi)


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of closed intervals (possibly empty)."""

    intervals: tuple = ()

    def indicator(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(np.shape(x), dtype=bool)
        for iv in self.intervals:
            out |= iv.indicator(x)
        return out


@dataclass(frozen=True)
class PeriodicSet:
    """Points whose phase ``frac((x - offset) / period)`` lies in ``[start, stop)``.

    Phases within 1e-9 of a multiple of 1/2 are snapped before comparison,
    so grid points sitting on a boundary are classified consistently.
    """

    period: float
    start: float = 0.0
    stop: float = 0.5
    offset: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise ValidationError("period must be positive")
        if not 0.0 <= self.start < self.stop <= 1.0:
            raise ValidationError("need 0 <= start < stop <= 1")

    def phase(self, x: np.ndarray) -> np.ndarray:
        t = np.mod((np.asarray(x, dtype=float) - self.offset) / self.period, 1.0)
        snapped = np.round(t * 2) / 2
        t = np.where(np.abs(t - snapped) < SNAP_TOL, snapped, t)
        return np.mod(t, 1.0)

    def indicator(self, x: np.ndarray) -> np.ndarray:
        t = self.phase(x)
        return (t >= self.start) & (t < self.stop)


FULL_LINE = Interval(-math.inf, math.inf)
POSITIVE_HALF_LINE = Interval(0.0, math.inf)
NEGATIVE_HALF_LINE = Interval(-math.inf, 0.0)


def as_set(obj):
    """Coerce ``(lo, hi)``, a list of such pairs, or a set object into a set."""
    if isinstance(obj, (Interval, IntervalSet, PeriodicSet)):
        return obj
    if obj is None:
        return IntervalSet(())
    if isinstance(obj, (tuple, list)):
        if len(obj) == 2 and all(isinstance(v, (int, float, np.floating, np.integer)) for v in obj):
            return Interval(float(obj[0]), float(obj[1]))
        return IntervalSet(tuple(as_set(o) for o in obj))
    raise ValidationError(f"cannot interpret {obj!r} as a set")


# --- operators ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridOperator:
    """Immutable descriptor of a grid operator.

    ``kind`` is one of ``position``, ``momentum`` (pointwise multipliers in
    the respective representation, ``values`` in FFT order for momentum),
    ``phase`` (pointwise unitary multiplier in position) or ``composed``
    (``factors`` applied right to left).
    """

    kind: str
    spec: GridSpec
    values: np.ndarray | None = None
    factors: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("position", "momentum", "phase", "composed"):
            raise ValidationError(f"unknown operator kind {self.kind!r}")
        if self.kind == "composed":
            for f in self.factors:
                if f.spec != self.spec:
                    raise ShapeError("composed factors must share a grid")
        else:
            vals = np.asarray(self.values)
            if vals.shape != (self.spec.n_points,):
                raise ShapeError(f"multiplier has shape {vals.shape}, grid has {self.spec.n_points} points")
            vals = vals.copy()
            vals.setflags(write=False)
            object.__setattr__(self, "values", vals)

    def adjoint(self) -> "GridOperator":
        if self.kind == "composed":
            return GridOperator("composed", self.spec, factors=tuple(f.adjoint() for f in reversed(self.factors)),
                                label=f"({self.label})*")
        return GridOperator(self.kind, self.spec, np.conj(self.values), label=f"({self.label})*")

    def __call__(self, psi, axis: int = -1):
        return apply(self, psi, axis=axis)


def position_mask(spec: GridSpec, region) -> GridOperator:
    region = as_set(region)
    return GridOperator("position", spec, region.indicator(spec.points).astype(float), label="chi(Q)")


def momentum_mask(spec: GridSpec, region) -> GridOperator:
    region = as_set(region)
    return GridOperator("momentum", spec, region.indicator(spec.fft_momenta).astype(float), label="chi(P)")


def quadratic_phase(spec: GridSpec, coefficient: float) -> GridOperator:
    """Multiplication by ``exp(i c x^2)``."""
    x = spec.points
    return GridOperator("phase", spec, np.exp(1j * coefficient * x * x), label=f"exp(i {coefficient:g} Q^2)")


def composed(ops: Sequence[GridOperator]) -> GridOperator:
    """Product ``ops[0] ops[1] ... ops[-1]`` (the last factor acts first)."""
    ops = tuple(ops)
    if not ops:
        raise ValidationError("composed() needs at least one operator")
    return GridOperator("composed", ops[0].spec, factors=ops, label=" ".join(o.label for o in ops))


def conjugated(op: GridOperator, unitary: GridOperator) -> GridOperator:
    """``U* op U``."""
    return composed([unitary.adjoint(), op, unitary])


def dichotomic_from_set(spec: GridSpec, domain: str, region) -> GridOperator:
    """``2 chi_region - 1`` in the position or momentum representation."""
    region = as_set(region)
    if domain == "position":
        mask = region.indicator(spec.points)
    elif domain == "momentum":
        mask = region.indicator(spec.fft_momenta)
    else:
        raise ValidationError(f"domain must be 'position' or 'momentum', got {domain!r}")
    return GridOperator(domain, spec, np.where(mask, 1.0, -1.0), label=f"2chi({domain[0].upper()})-1")


def _bcast(values: np.ndarray, ndim: int, axis: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = values.size
    return values.reshape(shape)


def apply(op: GridOperator, psi, axis: int = -1, spec: GridSpec | None = None) -> np.ndarray:
    """Apply a grid operator along ``axis`` of ``psi``.

    Raises
    ------
    ShapeError
        If ``spec`` is given and differs from ``op.spec``, or the axis length
        does not match the grid.
    """
    if spec is not None and spec != op.spec:
        raise ShapeError(f"operator grid {op.spec} does not match vector grid {spec}")
    psi = np.asarray(psi)
    axis = axis % psi.ndim
    if psi.shape[axis] != op.spec.n_points:
        raise ShapeError(f"axis {axis} has length {psi.shape[axis]}, grid has {op.spec.n_points} points")
    if op.kind == "composed":
        out = psi
        for f in reversed(op.factors):
            out = apply(f, out, axis=axis)
        return out
    vals = _bcast(op.values, psi.ndim, axis)
    if op.kind in ("position", "phase"):
        return psi * vals
    spectrum = np.fft.fft(psi, axis=axis, norm="ortho")
    return np.fft.ifft(spectrum * vals, axis=axis, norm="ortho")


def dense_matrix(op: GridOperator) -> np.ndarray:
    """Materialize ``op`` as an n x n matrix (column j is op applied to e_j)."""
    return apply(op, np.eye(op.spec.n_points, dtype=complex), axis=0)


def fourier_roundtrip_residual(psi: np.ndarray) -> float:
    back = np.fft.ifft(np.fft.fft(psi, norm="ortho"), norm="ortho")
    return float(np.max(np.abs(back - psi)))


# --- commutator norm --------------------------------------------------------


@dataclass(frozen=True)
class PowerIterationResult:
    value: float
    iterations: int
    vector: np.ndarray = field(repr=False)


def power_iteration(matvec, n: int, tol: float = 1e-10, max_iter: int = 20000, seed: int = 0,
                    dtype=complex) -> PowerIterationResult:
    """Dominant eigenvalue of a positive semidefinite operator.

    Stops when successive Rayleigh quotients differ by less than ``tol``.
    """
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n) + (1j * rng.normal(size=n) if dtype is complex else 0.0)
    v = v / np.linalg.norm(v)
    prev = None
    for it in range(1, max_iter + 1):
        w = matvec(v)
        rq = float(np.vdot(v, w).real)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return PowerIterationResult(0.0, it, v)
        if prev is not None and abs(rq - prev) < tol:
            return PowerIterationResult(rq, it, v)
        prev = rq
        v = w / nw
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations", last_estimate=prev,
                           iterations=max_iter)


def a3_norm_grid(a1: GridOperator, a2: GridOperator, tol: float = 1e-10, max_iter: int = 20000,
                 seed: int = 0) -> float:
    """Estimate ``||(2i)^-1 [A1, A2]||`` by power iteration on ``-[A1, A2]^2 / 4``."""
    if a1.spec != a2.spec:
        raise ShapeError("settings live on different grids")
    if not tol > 0:
        raise ValidationError("tol must be positive")

    def comm(v):
        return apply(a1, apply(a2, v)) - apply(a2, apply(a1, v))

    def matvec(v):
        # -[A1,A2]^2 / 4 = ([A1,A2]/2i)^2, which is positive semidefinite.
        return -0.25 * comm(comm(v))

    res = power_iteration(matvec, a1.spec.n_points, tol=tol, max_iter=max_iter, seed=seed)
    return math.sqrt(max(res.value, 0.0))


# --- two-particle states ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WaveFunction2D:
    """Two-particle amplitudes on a product grid.

    The state is stored either densely (``amplitudes``) or as a finite sum
    of products ``sum_k c_k u_k (x) v_k`` (``terms``), from which the dense
    array is formed on demand.  The factored form lets CHSH expectations
    be evaluated with one-dimensional operations only.
    """

    spec_a: GridSpec
    spec_b: GridSpec
    amplitudes_: np.ndarray | None = None
    terms: tuple | None = None
    norm_tolerance: float = 1e-8
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.amplitudes_ is None) == (self.terms is None):
            raise ValidationError("give exactly one of dense amplitudes or product terms")
        shape = (self.spec_a.n_points, self.spec_b.n_points)
        if self.amplitudes_ is not None:
            amp = np.asarray(self.amplitudes_, dtype=complex)
            if amp.shape != shape:
                raise ShapeError(f"amplitudes have shape {amp.shape}, grids need {shape}")
            object.__setattr__(self, "amplitudes_", amp)
        else:
            terms = []
            for c, u, v in self.terms:
                u = np.asarray(u, dtype=complex)
                v = np.asarray(v, dtype=complex)
                if u.shape != (shape[0],) or v.shape != (shape[1],):
                    raise ShapeError("term factors do not match the grids")
                terms.append((complex(c), u, v))
            object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def from_terms(cls, spec_a, spec_b, terms, normalize: bool = True, **kw) -> "WaveFunction2D":
        wf = cls(spec_a, spec_b, terms=tuple(terms), **kw)
        return wf.normalized() if normalize else wf

    @classmethod
    def from_amplitudes(cls, spec_a, spec_b, amplitudes, normalize: bool = True, **kw) -> "WaveFunction2D":
        wf = cls(spec_a, spec_b, amplitudes_=amplitudes, **kw)
        return wf.normalized() if normalize else wf

    @property
    def factored(self) -> bool:
        return self.terms is not None

    @cached_property
    def amplitudes(self) -> np.ndarray:
        if self.amplitudes_ is not None:
            return self.amplitudes_
        out = np.zeros((self.spec_a.n_points, self.spec_b.n_points), dtype=complex)
        for c, u, v in self.terms:
            out += c * np.outer(u, v)
        return out

    @property
    def cell(self) -> float:
        return self.spec_a.dx * self.spec_b.dx

    def gram(self, op_a: GridOperator | None = None, op_b: GridOperator | None = None) -> complex:
        """``<Psi| (op_a (x) op_b) Psi>``; ``None`` means identity."""
        if self.factored:
            us = [t[1] for t in self.terms]
            vs = [t[2] for t in self.terms]
            cs = np.array([t[0] for t in self.terms])
            xa = _local_matrix(us, op_a) * self.spec_a.dx
            xb = _local_matrix(vs, op_b) * self.spec_b.dx
            return complex(np.conj(cs) @ (xa * xb) @ cs)
        amp = self.amplitudes
        out = amp if op_b is None else apply(op_b, amp, axis=1)
        out = out if op_a is None else apply(op_a, out, axis=0)
        return complex(np.vdot(amp, out) * self.cell)

    def norm2(self) -> float:
        return self.gram().real

    def normalized(self) -> "WaveFunction2D":
        n = math.sqrt(self.norm2())
        if n == 0:
            raise ValidationError("cannot normalize the zero state")
        if self.factored:
            terms = tuple((c / n, u, v) for c, u, v in self.terms)
            return WaveFunction2D(self.spec_a, self.spec_b, terms=terms, norm_tolerance=self.norm_tolerance,
                                  meta=dict(self.meta))
        return WaveFunction2D(self.spec_a, self.spec_b, amplitudes_=self.amplitudes_ / n,
                              norm_tolerance=self.norm_tolerance, meta=dict(self.meta))

    def check_norm(self) -> float:
        n2 = self.norm2()
        if abs(n2 - 1.0) > self.norm_tolerance:
            raise ValidationError(f"state norm^2 = {n2:.12g} differs from 1 by more than {self.norm_tolerance:g}")
        return n2

    def edge_mass(self) -> float:
        """Probability outside the central half of the grid (either coordinate)."""
        def central(spec):
            mid = 0.5 * (spec.x_min + spec.x_max)
            return np.abs(spec.points - mid) <= 0.25 * spec.length
        ca, cb = central(self.spec_a), central(self.spec_b)
        if self.factored:
            pa = position_mask_values(self.spec_a, ca)
            pb = position_mask_values(self.spec_b, cb)
            inside = self.gram(pa, pb).real
        else:
            dens = np.abs(self.amplitudes) ** 2
            inside = float(dens[np.ix_(ca, cb)].sum() * self.cell)
        return max(0.0, self.norm2() - inside)

    def swapped(self) -> "WaveFunction2D":
        if self.factored:
            return WaveFunction2D(self.spec_b, self.spec_a, terms=tuple((c, v, u) for c, u, v in self.terms),
                                  norm_tolerance=self.norm_tolerance)
        return WaveFunction2D(self.spec_b, self.spec_a, amplitudes_=self.amplitudes.T,
                              norm_tolerance=self.norm_tolerance)

    def to_rows(self) -> np.ndarray:
        """Rows ``(q_A, q_B, Re Psi, Im Psi)`` with q_A the slow index."""
        qa, qb = np.meshgrid(self.spec_a.points, self.spec_b.points, indexing="ij")
        amp = self.amplitudes
        return np.column_stack([qa.ravel(), qb.ravel(), amp.real.ravel(), amp.imag.ravel()])

    @classmethod
    def from_rows(cls, spec_a: GridSpec, spec_b: GridSpec, rows: np.ndarray, **kw) -> "WaveFunction2D":
        rows = np.asarray(rows, dtype=float)
        shape = (spec_a.n_points, spec_b.n_points)
        if rows.shape != (shape[0] * shape[1], 4):
            raise ShapeError(f"expected {shape[0] * shape[1]} rows of 4 columns, got {rows.shape}")
        amp = (rows[:, 2] + 1j * rows[:, 3]).reshape(shape)
        return cls(spec_a, spec_b, amplitudes_=amp, **kw)

    def save_npz(self, path) -> None:
        np.savez(path, spec_a=json.dumps(self.spec_a.to_json()), spec_b=json.dumps(self.spec_b.to_json()),
                 amplitudes=self.amplitudes)

    @classmethod
    def load_npz(cls, path, **kw) -> "WaveFunction2D":
        with np.load(path) as data:
            return cls(GridSpec.from_json(str(data["spec_a"])), GridSpec.from_json(str(data["spec_b"])),
                       amplitudes_=data["amplitudes"], **kw)


def position_mask_values(spec: GridSpec, mask: np.ndarray) -> GridOperator:
    return GridOperator("position", spec, np.asarray(mask, dtype=float))


def _local_matrix(vectors, op):
    """Matrix ``<u_i | op u_j>`` (without the cell factor)."""
    stack = np.array(vectors)
    image = stack if op is None else apply(op, stack, axis=1)
    return stack.conj() @ image.T


@dataclass(frozen=True)
class Expectation:
    """Real part of an expectation value together with the discarded imaginary part."""

    value: float
    imag: float

    def __float__(self):
        return self.value


def chsh_expectation(psi: WaveFunction2D, a1: GridOperator, a2: GridOperator, b1: GridOperator,
                     b2: GridOperator) -> Expectation:
    """``<Psi| A1 (x) (B1 + B2) + A2 (x) (B1 - B2) |Psi>``.

    Raises
    ------
    ValidationError
        If the state norm differs from 1 by more than ``psi.norm_tolerance``.
    ShapeError
        If operator grids do not match the state's factor grids.
    """
    for op in (a1, a2):
        if op.spec != psi.spec_a:
            raise ShapeError("Alice's settings do not live on the state's first grid")
    for op in (b1, b2):
        if op.spec != psi.spec_b:
            raise ShapeError("Bob's settings do not live on the state's second grid")
    psi.check_norm()
    if psi.factored:
        val = psi.gram(a1, b1) + psi.gram(a1, b2) + psi.gram(a2, b1) - psi.gram(a2, b2)
    else:
        amp = psi.amplitudes
        y1 = apply(b1, amp, axis=1)
        y2 = apply(b2, amp, axis=1)
        t = apply(a1, y1 + y2, axis=0) + apply(a2, y1 - y2, axis=0)
        val = complex(np.vdot(amp, t) * psi.cell)
    return Expectation(float(val.real), float(val.imag))
