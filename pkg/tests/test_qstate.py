from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from mbqclab import qstate
from mbqclab.qstate import LocalOperator, PureState, SiteSpec

angles = st.floats(-np.pi, np.pi, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)


def test_site_zero_is_most_significant():
    spec = SiteSpec((2, 3))
    assert spec.index((1, 0)) == 3
    assert spec.labels(5) == (1, 2)


def test_cap_exceeded_is_explicit():
    with pytest.raises(qstate.CapExceededError, match="cap"):
        SiteSpec((2,) * 10, cap=100)


def test_unnormalized_state_rejected():
    with pytest.raises(ValueError, match="normalized"):
        PureState(SiteSpec((2,)), np.array([1.0, 1.0]))


def test_zero_vector_rejected():
    with pytest.raises(qstate.ZeroProbabilityError):
        PureState.from_vector((2,), [0, 0])


def test_operator_validation():
    with pytest.raises(ValueError, match="unitary"):
        LocalOperator((0,), np.diag([1.0, 2.0]), check_unitary=True)
    with pytest.raises(ValueError, match="Hermitian"):
        LocalOperator((0,), np.array([[0, 1], [0, 0]]), check_hermitian=True)
    with pytest.raises(ValueError, match="repeated"):
        LocalOperator((0, 0), np.eye(4))


def test_standard_gates():
    assert np.allclose(qstate.standard_gate("H").matrix, qstate.HADAMARD)
    assert np.allclose(qstate.standard_gate("CZ").matrix, np.diag([1, 1, 1, -1]))
    assert np.allclose(qstate.standard_gate("RZ", [np.pi]).matrix, np.diag([-1j, 1j]))
    with pytest.raises(ValueError):
        qstate.standard_gate("RZ")
    with pytest.raises(ValueError):
        qstate.standard_gate("nope")


def test_apply_cnot_on_reversed_sites():
    state = qstate.product_state([qstate.KET0, qstate.KET1])
    out = qstate.apply(state, qstate.standard_gate("CNOT", sites=(1, 0)))
    assert out.amplitude((1, 1)) == pytest.approx(1)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_embed_matches_kron(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    full = qstate.embed(LocalOperator((1,), m), (2, 3, 2))
    assert np.allclose(full, qstate.kron(np.eye(2), m, np.eye(2)))


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_measurement_probabilities_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    state = qstate.random_state((2, 3, 2), rng)
    basis = qstate.complete_basis([qstate.spin_eigvec(1, "x", 1)])
    probs = qstate.outcome_probabilities(state, 1, basis)
    assert probs.sum() == pytest.approx(1)
    rec, post = qstate.measure(state, 1, basis, rng)
    assert post.dims == (2, 2)
    assert rec.probability == pytest.approx(probs[rec.outcome])


def test_forced_zero_probability_outcome_raises():
    state = qstate.product_state([qstate.KET0])
    with pytest.raises(qstate.ZeroProbabilityError):
        qstate.measure(state, 0, qstate.basis_z(), 1, discard=False)


def test_incomplete_basis_rejected():
    state = qstate.product_state([qstate.KET0, qstate.KET0])
    with pytest.raises(ValueError, match="incomplete"):
        qstate.measure(state, 0, [qstate.KET0], 0)


def test_measure_without_discard_keeps_site():
    state = qstate.product_state([qstate.PLUS, qstate.KET0])
    _, post = qstate.measure(state, 0, qstate.basis_z(), 1, discard=False)
    assert post.amplitude((1, 0)) == pytest.approx(1)


def test_povm_completeness_enforced():
    state = qstate.product_state([qstate.KET0])
    with pytest.raises(ValueError, match="completeness"):
        qstate.apply_povm(state, 0, [np.eye(2) * 0.5], 0)


@given(angles)
@settings(max_examples=25, deadline=None)
def test_xy_bases_orthonormal_and_symmetric_phase(xi):
    a, b = qstate.basis_xy(xi)
    assert abs(np.vdot(a, b)) < 1e-12
    sym = qstate.xy_ket(xi, +1, symmetric=True)
    assert np.allclose(sym, np.exp(-0.5j * xi) * a)


@pytest.mark.parametrize("spin", [0.5, 1, 1.5, 2])
def test_spin_algebra(spin):
    sx, sy, sz = qstate.spin_matrices(spin)
    assert np.allclose(sx @ sy - sy @ sx, 1j * sz)
    casimir = sx @ sx + sy @ sy + sz @ sz
    assert np.allclose(casimir, spin * (spin + 1) * np.eye(sx.shape[0]))
    for axis, op in zip("xyz", (sx, sy, sz)):
        v = qstate.spin_eigvec(spin, axis, spin)
        assert np.allclose(op @ v, spin * v)


def test_evolve_matches_expm():
    rng = np.random.default_rng(1)
    state = qstate.random_state((2, 2), rng)
    h = qstate.build_hamiltonian([LocalOperator((0, 1), np.kron(qstate.PAULI_X, qstate.PAULI_X))], (2, 2))
    out = qstate.evolve(state, h, 0.4)
    expect = scipy.linalg.expm(-0.4j * h.matrix) @ state.amplitudes
    assert np.allclose(out.amplitudes, expect)


def test_spectrum_cap():
    with pytest.raises(qstate.CapExceededError):
        qstate.exact_spectrum(LocalOperator((0,), np.eye(8192)))


@given(seeds, angles)
@settings(max_examples=25, deadline=None)
def test_fidelity_ignores_global_phase(seed, phi):
    state = qstate.random_state((2, 2), np.random.default_rng(seed))
    other = PureState(state.spec, np.exp(1j * phi) * state.amplitudes)
    assert qstate.fidelity_up_to_phase(state, other) == pytest.approx(1)
    assert qstate.phase_aligned_distance(state.amplitudes, other.amplitudes) < 1e-12
