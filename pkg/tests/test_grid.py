import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.sparse.linalg import LinearOperator, eigsh

from posbell import projpair as pp
from posbell.errors import ConvergenceError, ShapeError, ValidationError
from posbell.grid import (
    FULL_LINE,
    NEGATIVE_HALF_LINE,
    POSITIVE_HALF_LINE,
    GridSpec,
    PeriodicSet,
    WaveFunction2D,
    a3_norm_grid,
    apply,
    chsh_expectation,
    composed,
    conjugated,
    dense_matrix,
    dichotomic_from_set,
    fourier_roundtrip_residual,
    momentum_mask,
    position_mask,
    power_iteration,
    quadratic_phase,
)

SPEC = GridSpec.centered(256, 0.1)


def _random_vector(rng, n=256):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def test_gridspec_invariants_and_json():
    s = GridSpec(1024, -20.0, 20.0)
    assert s.dx == pytest.approx(40 / 1024)
    assert s.dp == pytest.approx(2 * math.pi / 40)
    assert np.all(np.diff(s.momenta) > 0)
    assert s.momenta[0] < 0 < s.momenta[-1]
    assert GridSpec.from_json(s.to_json()) == s
    assert set(s.to_json()) == {"n", "x_min", "x_max"}
    with pytest.raises(ValidationError):
        GridSpec(8, -1.0, 1.0)
    with pytest.raises(ValidationError):
        GridSpec(64, 1.0, -1.0)


def test_full_line_masks_are_identity(rng):
    psi = _random_vector(rng)
    assert np.array_equal(apply(position_mask(SPEC, FULL_LINE), psi), psi)
    assert np.max(np.abs(apply(momentum_mask(SPEC, FULL_LINE), psi) - psi)) <= 1e-12


def test_disjoint_half_lines_annihilate(rng):
    psi = _random_vector(rng)
    # cell-centred grid: no point sits on the shared endpoint 0
    op = composed([position_mask(SPEC, NEGATIVE_HALF_LINE), position_mask(SPEC, POSITIVE_HALF_LINE)])
    assert np.all(apply(op, psi) == 0)


def test_shape_mismatch_raises(rng):
    other = GridSpec.centered(128, 0.1)
    with pytest.raises(ShapeError):
        apply(position_mask(SPEC, FULL_LINE), _random_vector(rng), spec=other)
    with pytest.raises(ShapeError):
        apply(position_mask(SPEC, FULL_LINE), np.ones(100))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([16, 64, 256, 1024, 3 * 256]))
def test_fourier_roundtrip(seed, n):
    psi = _random_vector(np.random.default_rng(seed), n)
    assert fourier_roundtrip_residual(psi) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(0.01, 5), st.sampled_from(["position", "momentum"]))
def test_dichotomic_squares_to_identity(lo, width, domain):
    psi = _random_vector(np.random.default_rng(1))
    a = dichotomic_from_set(SPEC, domain, (lo, lo + width))
    assert np.max(np.abs(apply(a, apply(a, psi)) - psi)) <= 1e-12


def test_dichotomic_full_and_empty_sets(rng):
    psi = _random_vector(rng)
    full = dichotomic_from_set(SPEC, "position", (SPEC.x_min, SPEC.x_max))
    assert np.array_equal(apply(full, psi), psi)
    empty = dichotomic_from_set(SPEC, "momentum", None)
    assert np.allclose(apply(empty, psi), -psi, atol=1e-12)


def test_sign_on_even_density_has_zero_mean():
    spec = GridSpec.centered(512, 0.05, cell_centered=True)
    x = spec.points
    psi = x * np.exp(-x * x)  # odd, so |psi| is even
    a = dichotomic_from_set(spec, "position", POSITIVE_HALF_LINE)
    out = apply(a, psi)
    assert np.allclose(out, np.abs(x) * np.exp(-x * x))
    assert abs(np.vdot(psi, out)) <= 1e-12


def test_interval_expectation_on_wide_gaussian():
    spec = GridSpec.centered(4096, 0.05)
    x = spec.points
    w = 10.0
    psi = np.exp(-x * x / (4 * w * w)) / (2 * math.pi * w * w) ** 0.25
    a = dichotomic_from_set(spec, "position", (-1.0, 1.0))
    grid_val = float(np.vdot(psi, apply(a, psi)).real * spec.dx)
    mass = quad(lambda t: math.exp(-t * t / (2 * w * w)) / math.sqrt(2 * math.pi * w * w), -1, 1)[0]
    assert grid_val == pytest.approx(2 * mass - 1, abs=1e-6)


def test_quadratic_phase_is_unitary_and_conjugation_preserves_norm(rng):
    psi = _random_vector(rng)
    u = quadratic_phase(SPEC, 0.37)
    assert np.allclose(np.abs(u.values), 1.0, atol=1e-15)
    a = conjugated(dichotomic_from_set(SPEC, "momentum", (-1.0, 1.0)), u)
    out = apply(a, psi)
    assert abs(np.linalg.norm(out) - np.linalg.norm(psi)) <= 1e-12 * np.linalg.norm(psi)
    assert np.max(np.abs(apply(a, out) - psi)) <= 1e-12


def test_composition_order_is_right_to_left(rng):
    psi = _random_vector(rng)
    u = quadratic_phase(SPEC, 0.5)
    m = momentum_mask(SPEC, (0.0, 2.0))
    assert np.allclose(apply(composed([m, u]), psi), apply(m, apply(u, psi)))


def test_dense_matrix_matches_apply(rng):
    spec = GridSpec.centered(32, 0.3)
    op = conjugated(dichotomic_from_set(spec, "momentum", (-1.0, 1.0)), quadratic_phase(spec, 0.2))
    psi = _random_vector(rng, 32)
    assert np.allclose(dense_matrix(op) @ psi, apply(op, psi), atol=1e-13)


def test_periodic_set_snapping():
    s = PeriodicSet(1.0)
    x = np.array([0.0, 0.5 - 1e-12, 1.0 + 1e-12, 0.25, 0.75])
    assert s.indicator(x).tolist() == [True, False, True, True, False]


def test_commuting_masks_give_zero():
    a1 = dichotomic_from_set(SPEC, "position", (-1.0, 1.0))
    a2 = dichotomic_from_set(SPEC, "position", POSITIVE_HALF_LINE)
    assert a3_norm_grid(a1, a2) == 0.0


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 3), st.floats(0.1, 3))
def test_a3_norm_grid_bounded_by_one(d, u):
    a1 = dichotomic_from_set(SPEC, "position", (-d, d))
    a2 = dichotomic_from_set(SPEC, "momentum", (-u, u))
    assert a3_norm_grid(a1, a2, tol=1e-10) <= 1 + 1e-10


def test_a3_norm_grid_matches_dense_oracle():
    spec = GridSpec.centered(64, 0.25)
    a1 = dichotomic_from_set(spec, "position", (-1.0, 1.0))
    a2 = dichotomic_from_set(spec, "momentum", (-1.3, 1.3))
    direct = pp.a3_norm_direct(dense_matrix(a1), dense_matrix(a2))
    assert a3_norm_grid(a1, a2, tol=1e-14) == pytest.approx(direct, abs=1e-6)


def test_power_iteration_reports_last_estimate():
    d = np.linspace(0.5, 1.0, 200)
    with pytest.raises(ConvergenceError) as info:
        power_iteration(lambda v: d * v, 200, tol=1e-15, max_iter=3)
    assert info.value.last_estimate is not None
    assert info.value.exit_code == 2


def _sign_pair(n):
    spec = GridSpec(n, -200.0, 200.0)
    return (dichotomic_from_set(spec, "position", POSITIVE_HALF_LINE),
            dichotomic_from_set(spec, "momentum", POSITIVE_HALF_LINE))


@pytest.mark.xfail(strict=True, reason="grid truncation: the commutator norm of Sign(Q), Sign(P) reaches only "
                                         "0.969 at n = 4096 on [-200, 200], outside the 2e-2 window")
def test_sign_pair_commutator_norm_4096():
    a1, a2 = _sign_pair(4096)
    assert a3_norm_grid(a1, a2, tol=1e-10) == pytest.approx(1.0, abs=2e-2)


def test_sign_pair_commutator_grows_toward_one():
    vals = [a3_norm_grid(*_sign_pair(n), tol=1e-10) for n in (1024, 2048, 4096, 8192)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert 0.95 < vals[-1] < 1.0


def test_sign_pair_power_iteration_agrees_with_lanczos():
    a1, a2 = _sign_pair(4096)

    def comm(v):
        return apply(a1, apply(a2, v)) - apply(a2, apply(a1, v))

    op = LinearOperator((4096, 4096), matvec=lambda v: -0.25 * comm(comm(v)), dtype=complex)
    lanczos = math.sqrt(eigsh(op, k=1, which="LA", tol=1e-12)[0][0])
    assert a3_norm_grid(a1, a2, tol=1e-12) == pytest.approx(lanczos, abs=1e-6)


# --- two-particle states ------------------------------------------------------


def _settings(spec):
    u = quadratic_phase(spec, 0.3)
    return (dichotomic_from_set(spec, "position", (-1.0, 1.0)),
            conjugated(dichotomic_from_set(spec, "momentum", (-1.2, 1.2)), u))


def test_product_states_satisfy_chsh(rng):
    spec = GridSpec.centered(64, 0.2)
    a1, a2 = _settings(spec)
    for _ in range(20):
        u, v = _random_vector(rng, 64), _random_vector(rng, 64)
        psi = WaveFunction2D.from_terms(spec, spec, [(1.0, u, v)])
        val = chsh_expectation(psi, a1, a2, a1, a2)
        assert abs(val.value) <= 2 + 1e-9
        dense = WaveFunction2D.from_amplitudes(spec, spec, np.outer(u, v))
        assert chsh_expectation(dense, a1, a2, a1, a2).value == pytest.approx(val.value, abs=1e-12)


def test_grid_expectation_matches_dense_top_eigenvector():
    # the top eigenvector of T attains ||T|| = sqrt(4 (1 + ||A3|| ||B3||))
    spec = GridSpec.centered(16, 0.4)
    a1, a2 = _settings(spec)
    mats = [dense_matrix(o) for o in (a1, a2)]
    mats = [0.5 * (m + m.conj().T) for m in mats]
    ops = pp.ChshOperatorSet(mats[0], mats[1], mats[0], mats[1])
    ev, vec = np.linalg.eigh(pp.chsh_operator(ops))
    top = vec[:, -1].reshape(16, 16) / spec.dx
    psi = WaveFunction2D.from_amplitudes(spec, spec, top)
    val = chsh_expectation(psi, a1, a2, a1, a2)
    assert val.value == pytest.approx(ev[-1], abs=1e-10)
    assert val.value == pytest.approx(pp.chsh_norm_formula(ops), abs=1e-10)
    assert abs(val.imag) <= 1e-10


def test_chsh_expectation_rejects_unnormalized(rng):
    spec = GridSpec.centered(32, 0.2)
    a1, a2 = _settings(spec)
    psi = WaveFunction2D(spec, spec, amplitudes_=np.ones((32, 32)))
    with pytest.raises(ValidationError):
        chsh_expectation(psi, a1, a2, a1, a2)
    other = GridSpec.centered(32, 0.3)
    with pytest.raises(ShapeError):
        chsh_expectation(psi.normalized(), *_settings(other), a1, a2)


def test_wavefunction_serialization(tmp_path, rng):
    spec = GridSpec.centered(32, 0.2)
    psi = WaveFunction2D.from_amplitudes(spec, spec, rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32)))
    back = WaveFunction2D.from_rows(spec, spec, psi.to_rows())
    assert np.array_equal(back.amplitudes, psi.amplitudes)
    psi.save_npz(tmp_path / "psi.npz")
    loaded = WaveFunction2D.load_npz(tmp_path / "psi.npz")
    assert loaded.spec_a == spec and np.array_equal(loaded.amplitudes, psi.amplitudes)
    assert psi.check_norm() == pytest.approx(1.0, abs=1e-12)


def test_edge_mass_diagnostic():
    spec = GridSpec.centered(64, 0.5)
    x = spec.points
    inner = np.where(np.abs(x) < 4, 1.0, 0.0)
    outer = np.where(np.abs(x) > 10, 1.0, 0.0)
    assert WaveFunction2D.from_terms(spec, spec, [(1, inner, inner)]).edge_mass() == pytest.approx(0, abs=1e-12)
    assert WaveFunction2D.from_terms(spec, spec, [(1, outer, inner)]).edge_mass() == pytest.approx(1, abs=1e-12)
    dense = WaveFunction2D.from_amplitudes(spec, spec, np.outer(outer, inner))
    assert dense.edge_mass() == pytest.approx(1, abs=1e-12)
