import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from posbell import projpair as pp
from posbell.errors import SizeError, ValidationError

SQ2 = math.sqrt(2)


def test_center_element_trivial_cases():
    eye = np.eye(2)
    assert np.allclose(pp.center_element(pp.ProjectionPair(eye, eye)), eye)
    p1 = np.diag([1.0, 0.0])
    p2 = np.diag([0.0, 1.0])
    assert np.allclose(pp.center_element(pp.ProjectionPair(p1, p2)), 0)


def test_center_element_quarter_angle_is_half():
    pair = pp.qubit_pair(math.pi / 4)
    c = pp.center_element(pair)
    assert np.allclose(c, 0.5 * np.eye(2), atol=1e-14)
    # C = 1 - (P1 - P2)^2
    d = pair.p1 - pair.p2
    assert np.allclose(c, np.eye(2) - d @ d, atol=1e-14)


def test_pair_rejects_non_projection():
    with pytest.raises(ValidationError, match="idempot"):
        pp.ProjectionPair(np.diag([1.0, 0.5]), np.eye(2))
    with pytest.raises(ValidationError):
        pp.ProjectionPair(np.array([[1.0, 1.0], [0.0, 0.0]]), np.eye(2))


def test_commutator_identity_examples():
    assert pp.commutator_identity_residual(pp.ProjectionPair(np.diag([1.0, 0.0]), np.diag([1.0, 1.0]))) == 0
    assert pp.commutator_identity_residual(pp.qubit_pair(math.pi / 4)) <= 1e-12


def test_identities_on_500_random_pairs(rng):
    worst = 0.0
    for _ in range(500):
        pair = pp.random_pair(int(rng.integers(1, 13)), rng)
        c = pp.center_element(pair)
        ev = np.linalg.eigvalsh(c)
        assert ev.min() >= -1e-12 and ev.max() <= 1 + 1e-12
        worst = max(worst, pp.commutator_identity_residual(pair), pp.centrality_residual(pair))
    assert worst <= 1e-12


def test_a3_norm_examples(rng):
    assert pp.a3_norm(pp.ProjectionPair(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))) == pytest.approx(0, abs=1e-15)
    assert pp.a3_norm(pp.qubit_pair(math.pi / 4)) == pytest.approx(1.0, abs=1e-12)
    for _ in range(50):
        pair = pp.random_pair(int(rng.integers(2, 9)), rng)
        assert abs(pp.a3_norm(pair) - pp.a3_norm_direct(pair.a1, pair.a2)) <= 1e-10
        assert abs(pp.a3_norm_central(pair) - pp.a3_norm(pair)) <= 1e-7


def test_chsh_norm_direct_examples():
    sx, sy, _ = pp.pauli()
    same = pp.ChshOperatorSet(sx, sx, sx, sx)
    assert pp.chsh_norm_direct(same) == pytest.approx(2.0, abs=1e-12)
    qubit = pp.ChshOperatorSet(sx, sy, sx, sy)
    assert pp.chsh_norm_direct(qubit) == pytest.approx(2 * SQ2, abs=1e-12)
    assert pp.chsh_norm_formula(qubit) == pytest.approx(2 * SQ2, abs=1e-12)


def test_chsh_norm_size_guard(rng):
    ops = pp.random_operator_set(rng, 8, 8)
    with pytest.raises(SizeError):
        pp.chsh_norm_direct(ops, max_dim=32)


def test_formula_matches_direct_dim4(rng):
    for _ in range(20):
        ops = pp.random_operator_set(rng, 4, 4)
        assert abs(pp.chsh_norm_formula(ops) - pp.chsh_norm_direct(ops)) <= 1e-10


def test_formula_exactly_two_for_commuting_alice(rng):
    sx, _, _ = pp.pauli()
    b = pp.random_operator_set(rng, 2, 3)
    ops = pp.ChshOperatorSet(sx, -sx, b.b1, b.b2)
    assert pp.chsh_norm_formula(ops) == 2.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.integers(2, 8))
def test_chsh_norm_between_classical_and_tsirelson(seed, da, db):
    r = np.random.default_rng(seed)
    ops = pp.random_operator_set(r, da, db)
    direct = pp.chsh_norm_direct(ops)
    assert 2 - 1e-10 <= direct <= 2 * SQ2 + 1e-10
    assert abs(direct - pp.chsh_norm_formula(ops)) <= 1e-10


def test_halmos_quarter_angle():
    d = pp.halmos_decompose(pp.qubit_pair(math.pi / 4))
    assert d.k_dim == 1
    assert d.h_spectrum() == pytest.approx([0.5], abs=1e-14)
    assert max(d.residuals.values()) <= 1e-12


def test_halmos_commuting_pair_is_all_kernel():
    d = pp.halmos_decompose(pp.ProjectionPair(np.diag([1.0, 0.0, 1.0]), np.diag([1.0, 1.0, 0.0])))
    assert d.k_dim == 0
    assert d.h0_basis.shape[1] == 3


def test_halmos_random_dim8(rng):
    for _ in range(30):
        d = pp.halmos_decompose(pp.random_pair(8, rng))
        assert max(d.residuals.values()) <= 1e-10
        spec = d.h_spectrum()
        assert np.all(spec >= 0) and np.all(spec <= 1)


def test_halmos_shared_direction_goes_to_kernel():
    # P1 and P2 share e0, which belongs to ker A3; the tilted pair spans K
    p1 = np.diag([1.0, 1.0, 0.0, 0.0])
    v = np.array([0.0, math.cos(0.4), math.sin(0.4), 0.0])
    p2 = np.diag([1.0, 0.0, 0.0, 0.0]) + np.outer(v, v)
    d = pp.halmos_decompose(pp.ProjectionPair(p1, p2))
    assert d.k_dim == 1
    assert d.h0_basis.shape[1] == 2
    assert max(d.residuals.values()) <= 1e-10


def test_halmos_folds_nearly_commuting_direction():
    # H eigenvalue cos^2(1e-7) is within 1e-12 of 1, so the direction is folded
    d = pp.halmos_decompose(pp.qubit_pair(1e-7))
    assert d.k_dim == 0
    assert d.folded.size == 2  # C is scalar on the qubit block
    assert d.residuals["a3_kernel"] == pytest.approx(pp.a3_norm(d.pair), rel=1e-6)


def test_pair_json_roundtrip(rng):
    pair = pp.random_pair(5, rng)
    back = pp.ProjectionPair.from_json(pair.to_json())
    assert np.array_equal(back.p1, pair.p1) and np.array_equal(back.p2, pair.p2)


def _qubit_state(phase):
    pair = pp.qubit_pair(math.pi / 4)
    d = pp.halmos_decompose(pair)
    f, lam = pp.half_eigenvector(d)
    st_ = pp.build_max_state(d, d, f, f, phase=phase)
    return pair, st_, abs(lam - 0.5)


def test_max_state_qubit_is_tsirelson():
    pair, st_, r = _qubit_state(-math.pi / 4)
    assert r <= 1e-14
    val = pp.chsh_expectation_dense(pp.ChshOperatorSet.from_pairs(pair, pair), st_.vector)
    assert val == pytest.approx(2 * SQ2, abs=1e-10)


def test_max_state_swapped_phase_reflected_settings():
    pair, st_, _ = _qubit_state(math.pi / 4)
    ops = pp.ChshOperatorSet.from_pairs(pair, pair).reflected()
    assert abs(pp.chsh_expectation_dense(ops, st_.vector)) == pytest.approx(2 * SQ2, abs=1e-10)


def test_max_state_rejects_unnormalized():
    d = pp.halmos_decompose(pp.qubit_pair(math.pi / 4))
    with pytest.raises(ValidationError):
        pp.build_max_state(d, d, np.array([2.0]), np.array([1.0]))


def test_deficit_shrinks_with_residual():
    thetas = [0.5, 0.6, 0.7, 0.75, 0.78]
    deficits, residuals = [], []
    for th in thetas:
        pair = pp.qubit_pair(th)
        d = pp.halmos_decompose(pair)
        f, lam = pp.half_eigenvector(d)
        r = abs(lam - 0.5)
        st_ = pp.build_max_state(d, d, f, f)
        val = pp.chsh_expectation_dense(pp.ChshOperatorSet.from_pairs(pair, pair), st_.vector)
        deficits.append(2 * SQ2 - val)
        residuals.append(r)
    assert all(b < a for a, b in zip(residuals, residuals[1:]))
    assert all(b < a for a, b in zip(deficits, deficits[1:]))
    # empirical constant for <T> >= 2 sqrt 2 - c r
    c = max(dd / rr for dd, rr in zip(deficits, residuals))
    assert c < 10
