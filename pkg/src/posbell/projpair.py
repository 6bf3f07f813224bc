"""Finite-dimensional algebra of two projections.

Everything here works with small dense matrices and exact Hermitian
eigendecompositions, so it doubles as the brute-force oracle for the
grid-based and semi-analytic code.

For a pair of projections ``P1, P2`` with dichotomic observables
``A_i = 2 P_i - 1`` the central element ``C = 1 - P1 - P2 + P1 P2 + P2 P1``
commutes with both projections, ``-[P1, P2]^2 = C (1 - C)``, and the
commutator ``A3 = [A1, A2] / (2i)`` has norm ``2 sqrt(||C (1 - C)||)``.
The CHSH operator built from two such pairs has norm
``sqrt(4 (1 + ||A3|| ||B3||))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DecompositionError, ShapeError, SizeError, ValidationError

PROJECTION_TOL = 1e-12
DICHOTOMIC_TOL = 1e-12
DEFAULT_MAX_DIM = 4096


def opnorm(x: np.ndarray) -> float:
    """Operator (spectral) norm of a dense matrix."""
    x = np.asarray(x)
    if x.size == 0:
        return 0.0
    if np.allclose(x, x.conj().T, rtol=0, atol=1e-13):
        return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (x + x.conj().T)))))
    return float(np.linalg.norm(x, 2))


def _check_square(m: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ShapeError(f"{name} must be a nonempty square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class ProjectionPair:
    """Two orthogonal projections on the same finite-dimensional space."""

    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        p1 = _check_square(self.p1, "p1")
        p2 = _check_square(self.p2, "p2")
        if p1.shape != p2.shape:
            raise ShapeError(f"projections differ in shape: {p1.shape} vs {p2.shape}")
        for name, p in (("p1", p1), ("p2", p2)):
            herm = opnorm(p - p.conj().T)
            if herm > PROJECTION_TOL:
                raise ValidationError(f"{name} is not Hermitian: ||P - P*|| = {herm:.3g}")
            idem = opnorm(p @ p - p)
            if idem > PROJECTION_TOL:
                raise ValidationError(f"{name} is not idempotent: ||P^2 - P|| = {idem:.3g}")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)

    @property
    def dim(self) -> int:
        return self.p1.shape[0]

    @property
    def a1(self) -> np.ndarray:
        return 2 * self.p1 - np.eye(self.dim)

    @property
    def a2(self) -> np.ndarray:
        return 2 * self.p2 - np.eye(self.dim)

    def to_json(self) -> dict:
        return {"p1": matrix_to_json(self.p1), "p2": matrix_to_json(self.p2)}

    @classmethod
    def from_json(cls, obj: dict) -> "ProjectionPair":
        return cls(matrix_from_json(obj["p1"]), matrix_from_json(obj["p2"]))


def matrix_to_json(m: np.ndarray) -> list:
    """Complex matrix as nested lists of ``[re, im]`` pairs."""
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ShapeError("expected nested [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def random_projection(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Spectral projection of a random Hermitian matrix onto its top ``rank`` eigenvectors.

    The rank is drawn uniformly from ``0..dim`` when not given.
    """
    if rank is None:
        rank = int(rng.integers(0, dim + 1))
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = z + z.conj().T
    _, vecs = np.linalg.eigh(h)
    v = vecs[:, dim - rank:]
    p = v @ v.conj().T
    return 0.5 * (p + p.conj().T)


def random_pair(dim: int, rng: np.random.Generator) -> ProjectionPair:
    return ProjectionPair(random_projection(dim, rng), random_projection(dim, rng))


def rank_one_projection(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def qubit_pair(theta: float) -> ProjectionPair:
    """P1 = diag(1, 0) and P2 projecting onto (cos theta, sin theta)."""
    return ProjectionPair(np.diag([1.0, 0.0]), rank_one_projection([np.cos(theta), np.sin(theta)]))


def center_element(pair: ProjectionPair) -> np.ndarray:
    """Return C = 1 - P1 - P2 + P1 P2 + P2 P1."""
    p1, p2 = pair.p1, pair.p2
    c = np.eye(pair.dim) - p1 - p2 + p1 @ p2 + p2 @ p1
    return 0.5 * (c + c.conj().T)


def commutator_identity_residual(pair: ProjectionPair) -> float:
    """Return ||-[P1, P2]^2 - C (1 - C)||."""
    p1, p2 = pair.p1, pair.p2
    comm = p1 @ p2 - p2 @ p1
    c = center_element(pair)
    return opnorm(-comm @ comm - c @ (np.eye(pair.dim) - c))


def centrality_residual(pair: ProjectionPair) -> float:
    """Largest of ||[C, P1]|| and ||[C, P2]||."""
    c = center_element(pair)
    return max(opnorm(c @ pair.p1 - pair.p1 @ c), opnorm(c @ pair.p2 - pair.p2 @ c))


def commutator_a3(a1: np.ndarray, a2: np.ndarray) -> np.ndarray:
    """A3 = (2i)^-1 [A1, A2], a Hermitian matrix."""
    a3 = (a1 @ a2 - a2 @ a1) / 2j
    return 0.5 * (a3 + a3.conj().T)


def a3_norm(pair: ProjectionPair) -> float:
    """Return ||A3|| = 2 sqrt(||C (1 - C)||).

    Since C (1 - C) = [P1, P2]* [P1, P2], the square root is taken
    analytically as the top singular value of [P1, P2].  Rooting the
    eigenvalues of C directly would turn rounding noise of order 1e-16
    into errors of order 1e-8 for nearly commuting pairs.
    """
    comm = pair.p1 @ pair.p2 - pair.p2 @ pair.p1
    return float(2.0 * np.linalg.norm(comm, 2))


def a3_norm_central(pair: ProjectionPair) -> float:
    """``2 sqrt(max c (1 - c))`` over the spectrum of C; accurate to about 1e-8."""
    ev = np.clip(np.linalg.eigvalsh(center_element(pair)), 0.0, 1.0)
    return float(2.0 * np.sqrt(np.max(ev * (1.0 - ev))))


def a3_norm_direct(a1: np.ndarray, a2: np.ndarray) -> float:
    """Largest singular value of (2i)^-1 [A1, A2]."""
    return float(np.linalg.norm((a1 @ a2 - a2 @ a1) / 2j, 2))


@dataclass(frozen=True)
class ChshOperatorSet:
    """Alice's settings a1, a2 and Bob's b1, b2, each a dichotomic Hermitian matrix."""

    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        mats = {}
        for name in ("a1", "a2", "b1", "b2"):
            m = _check_square(getattr(self, name), name)
            if opnorm(m - m.conj().T) > DICHOTOMIC_TOL:
                raise ValidationError(f"{name} is not Hermitian")
            if opnorm(m @ m - np.eye(m.shape[0])) > DICHOTOMIC_TOL:
                raise ValidationError(f"{name} does not square to the identity")
            mats[name] = m
        if mats["a1"].shape != mats["a2"].shape:
            raise ShapeError("Alice's settings act on different spaces")
        if mats["b1"].shape != mats["b2"].shape:
            raise ShapeError("Bob's settings act on different spaces")
        for name, m in mats.items():
            object.__setattr__(self, name, m)

    @classmethod
    def from_pairs(cls, alice: ProjectionPair, bob: ProjectionPair) -> "ChshOperatorSet":
        return cls(alice.a1, alice.a2, bob.a1, bob.a2)

    @property
    def dims(self) -> tuple[int, int]:
        return self.a1.shape[0], self.b1.shape[0]

    def reflected(self) -> "ChshOperatorSet":
        """Settings with the second observable on each side negated."""
        return ChshOperatorSet(self.a1, -self.a2, self.b1, -self.b2)


def random_dichotomic(dim: int, rng: np.random.Generator) -> np.ndarray:
    return 2 * random_projection(dim, rng) - np.eye(dim)


def random_operator_set(rng: np.random.Generator, dim_a: int, dim_b: int) -> ChshOperatorSet:
    return ChshOperatorSet(
        random_dichotomic(dim_a, rng), random_dichotomic(dim_a, rng),
        random_dichotomic(dim_b, rng), random_dichotomic(dim_b, rng),
    )


def pauli() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
    s3 = np.array([[1, 0], [0, -1]], dtype=complex)
    return s1, s2, s3


def chsh_operator(ops: ChshOperatorSet) -> np.ndarray:
    """T = A1 (x) (B1 + B2) + A2 (x) (B1 - B2)."""
    t = np.kron(ops.a1, ops.b1 + ops.b2) + np.kron(ops.a2, ops.b1 - ops.b2)
    return 0.5 * (t + t.conj().T)


def chsh_norm_direct(ops: ChshOperatorSet, max_dim: int = DEFAULT_MAX_DIM) -> float:
    """Operator norm of T from a full Hermitian eigendecomposition."""
    da, db = ops.dims
    if da * db > max_dim:
        raise SizeError(f"product dimension {da * db} exceeds cap {max_dim}")
    return float(np.max(np.abs(np.linalg.eigvalsh(chsh_operator(ops)))))


def chsh_norm_formula(ops: ChshOperatorSet) -> float:
    """sqrt(4 (1 + ||A3|| ||B3||)) from the two local commutators."""
    na = a3_norm_direct(ops.a1, ops.a2)
    nb = a3_norm_direct(ops.b1, ops.b2)
    return float(np.sqrt(4.0 * (1.0 + na * nb)))


def expectation(op: np.ndarray, psi: np.ndarray) -> complex:
    psi = np.asarray(psi, dtype=complex)
    return complex(np.vdot(psi, op @ psi))


def chsh_expectation_dense(ops: ChshOperatorSet, psi: np.ndarray) -> float:
    """<psi|T psi> for a vector on the product space (Alice's factor first)."""
    val = expectation(chsh_operator(ops), psi)
    return val.real


@dataclass(frozen=True)
class HalmosDecomposition:
    """Reduction of a projection pair to 2x2-matrix form.

    The space splits as ``H0 + H0^perp`` where ``H0 = ker A3``.  On the
    orthogonal complement the map ``v`` sends a vector to ``K (x) C^2`` with
    ``K = P1 H0^perp``, and the settings become ``1 (x) s1``,
    ``alpha(H) (x) s1 + beta(H) (x) s2``, with ``A3 = beta(H) (x) s3``.
    Here ``alpha(h) = 2h - 1`` and ``beta(h) = 2 sqrt(h (1 - h))``.

    Attributes
    ----------
    pair : ProjectionPair
    h0_basis : ndarray, shape (dim, m0)
        Orthonormal basis of the commuting sector.
    k_basis : ndarray, shape (dim, k)
        Orthonormal basis of K inside the full space.
    h_op : ndarray, shape (k, k)
        Compression of P1 P2 P1 to K.
    v : ndarray, shape (2k, dim)
        Matrix of the map; rows are ordered as ``K (x) C^2`` (K index major).
    h0_eigenvalues : ndarray
        Eigenvalues of C assigned to the commuting sector.
    residuals : dict
        Isometry and reconstruction residuals.
    """

    pair: ProjectionPair
    h0_basis: np.ndarray
    k_basis: np.ndarray
    h_op: np.ndarray
    v: np.ndarray
    h0_eigenvalues: np.ndarray
    residuals: dict = field(default_factory=dict)

    @property
    def k_dim(self) -> int:
        return self.k_basis.shape[1]

    @property
    def folded(self) -> np.ndarray:
        """Eigenvalues of C assigned to H0 although not exactly 0 or 1."""
        ev = self.h0_eigenvalues
        dist = np.minimum(np.abs(ev), np.abs(1.0 - ev))
        return ev[dist > 0.0]

    def h_spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.h_op) if self.k_dim else np.zeros(0)

    def embed(self, f: np.ndarray) -> np.ndarray:
        """Vector of K (given in k_basis coordinates) as a vector of the full space."""
        return self.k_basis @ np.asarray(f, dtype=complex)


def _hfunc(h: np.ndarray, fn) -> np.ndarray:
    ev, vec = np.linalg.eigh(h)
    return (vec * fn(np.clip(ev, 0.0, 1.0))) @ vec.conj().T


def halmos_decompose(pair: ProjectionPair, fold_tol: float = 1e-12, check_tol: float = 1e-8) -> HalmosDecomposition:
    """Construct the two-projection decomposition of ``pair``.

    Directions where C is within ``fold_tol`` of 0 or 1 form the commuting
    sector H0.  On the rest, ``v phi = i P1 phi (x) |+> + (H (1-H))^-1/2 P1 P2 (1-P1) phi (x) |->``
    with ``|+-> = (1, +-1)/sqrt(2)``.

    Raises
    ------
    DecompositionError
        If any reconstruction residual exceeds ``check_tol`` plus twice the
        commutator norm left on the folded directions.
    """
    d = pair.dim
    eye = np.eye(d)
    p1, p2 = pair.p1, pair.p2
    c = center_element(pair)
    cev, cvec = np.linalg.eigh(c)
    dist = np.minimum(np.abs(cev), np.abs(1.0 - cev))
    in_h0 = dist <= fold_tol
    h0_basis = cvec[:, in_h0]
    q = cvec[:, ~in_h0] @ cvec[:, ~in_h0].conj().T

    # K = P1 H0^perp: range of P1 Q.
    m = p1 @ q
    m = 0.5 * (m + m.conj().T)
    mev, mvec = np.linalg.eigh(m)
    k_basis = mvec[:, mev > 0.5]
    k = k_basis.shape[1]

    h_full = p1 @ p2 @ p1
    h_op = k_basis.conj().T @ h_full @ k_basis
    h_op = 0.5 * (h_op + h_op.conj().T)

    if k:
        inv_sqrt = _hfunc(h_op, lambda x: 1.0 / np.sqrt(x * (1.0 - x)))
        top = 1j * k_basis.conj().T @ p1
        bot = inv_sqrt @ k_basis.conj().T @ p1 @ p2 @ (eye - p1)
        plus = np.array([1.0, 1.0]) / np.sqrt(2)
        minus = np.array([1.0, -1.0]) / np.sqrt(2)
        v = (np.kron(top, plus[:, None]) + np.kron(bot, minus[:, None])) @ q
    else:
        v = np.zeros((0, d), dtype=complex)

    s1, s2, s3 = pauli()
    residuals = {}
    residuals["isometry"] = opnorm(v.conj().T @ v - q) if k else 0.0
    residuals["coisometry"] = opnorm(v @ v.conj().T - np.eye(2 * k)) if k else 0.0
    if k:
        alpha = _hfunc(h_op, lambda x: 2 * x - 1)
        beta = _hfunc(h_op, lambda x: 2 * np.sqrt(x * (1 - x)))
        ik = np.eye(k)
        a1m = v @ pair.a1 @ v.conj().T
        a2m = v @ pair.a2 @ v.conj().T
        a3m = v @ commutator_a3(pair.a1, pair.a2) @ v.conj().T
        residuals["a1"] = opnorm(a1m - np.kron(ik, s1))
        residuals["a2"] = opnorm(a2m - np.kron(alpha, s1) - np.kron(beta, s2))
        residuals["a3"] = opnorm(a3m - np.kron(beta, s3))
    else:
        residuals["a1"] = residuals["a2"] = residuals["a3"] = 0.0
    # A3 must vanish on the commuting sector.
    if h0_basis.shape[1]:
        residuals["a3_kernel"] = float(np.linalg.norm(commutator_a3(pair.a1, pair.a2) @ h0_basis, 2))
    else:
        residuals["a3_kernel"] = 0.0

    # folding a direction with c(1 - c) = delta leaves ||A3|| = 2 sqrt(delta) there
    fold_cost = 2.0 * float(np.sqrt(np.max(cev[in_h0] * (1.0 - cev[in_h0]), initial=0.0).clip(0.0)))
    worst = max(residuals.values())
    if worst > check_tol + 2.0 * fold_cost:
        raise DecompositionError(f"reconstruction residual {worst:.3g} exceeds {check_tol:g}", last_estimate=worst)
    return HalmosDecomposition(pair, h0_basis, k_basis, h_op, v, cev[in_h0], residuals)


@dataclass(frozen=True)
class MaxViolatingState:
    """Product-space vector (Alice's factor first) and the eigenvector residual it was built from."""

    vector: np.ndarray
    residual: float


def _e_vectors(decomp: HalmosDecomposition, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p1, p2 = decomp.pair.p1, decomp.pair.p2
    eye = np.eye(decomp.pair.dim)
    g = np.sqrt(2) * (p2 @ decomp.embed(f))
    return (-1j * p1 + (eye - p1)) @ g, (-1j * p1 - (eye - p1)) @ g


def _check_unit(f, name: str, k: int) -> np.ndarray:
    f = np.asarray(f, dtype=complex)
    if f.shape != (k,):
        raise ShapeError(f"{name} must have shape ({k},), got {f.shape}")
    if abs(np.linalg.norm(f) - 1.0) > 1e-10:
        raise ValidationError(f"{name} is not normalized: norm {np.linalg.norm(f):.12g}")
    return f


def build_max_state(
    decomp_a: HalmosDecomposition,
    decomp_b: HalmosDecomposition,
    f_a,
    f_b,
    phase: float = -np.pi / 4,
) -> MaxViolatingState:
    """Maximally violating vector from (approximate) half-eigenvectors of H.

    ``f_a`` and ``f_b`` are given in ``k_basis`` coordinates.  The result is
    ``2^-1/2 [exp(i phase) e+ (x) e+ + e- (x) e-]`` with
    ``e+- = (-i P1 +- (1 - P1)) sqrt(2) P2 f``, renormalized.
    """
    f_a = _check_unit(f_a, "f_a", decomp_a.k_dim)
    f_b = _check_unit(f_b, "f_b", decomp_b.k_dim)
    r = max(
        float(np.linalg.norm(decomp_a.h_op @ f_a - 0.5 * f_a)),
        float(np.linalg.norm(decomp_b.h_op @ f_b - 0.5 * f_b)),
    )
    ea_p, ea_m = _e_vectors(decomp_a, f_a)
    eb_p, eb_m = _e_vectors(decomp_b, f_b)
    psi = (np.exp(1j * phase) * np.kron(ea_p, eb_p) + np.kron(ea_m, eb_m)) / np.sqrt(2)
    psi = psi / np.linalg.norm(psi)
    return MaxViolatingState(psi, r)


def half_eigenvector(decomp: HalmosDecomposition) -> tuple[np.ndarray, float]:
    """Eigenvector of H whose eigenvalue is closest to 1/2, with that eigenvalue."""
    if decomp.k_dim == 0:
        raise ValidationError("commuting pair: K is empty, no half-eigenvector exists")
    ev, vec = np.linalg.eigh(decomp.h_op)
    i = int(np.argmin(np.abs(ev - 0.5)))
    return vec[:, i], float(ev[i])
