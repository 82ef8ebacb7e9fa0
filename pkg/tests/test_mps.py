from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbqclab import aklt, graphstate, mps, qstate
from mbqclab.mps import MPSChain

AKLT_LEFT = np.array([0, 1], dtype=complex)
AKLT_RIGHT = np.array([1, 0], dtype=complex)


@pytest.mark.parametrize("n", range(2, 9))
def test_open_cluster_mps_is_path_graph_state(n):
    chain = MPSChain.uniform(mps.cluster_tensors(), n, mps.CLUSTER_LEFT, mps.CLUSTER_RIGHT)
    state, _ = mps.to_dense(chain)
    assert qstate.fidelity_up_to_phase(state, graphstate.build_dense(graphstate.path_graph(n))) > 1 - 1e-12


@pytest.mark.parametrize("n", range(3, 9))
def test_periodic_cluster_mps_is_ring_graph_state(n):
    state, _ = mps.to_dense(MPSChain.uniform(mps.cluster_tensors(), n))
    assert qstate.fidelity_up_to_phase(state, graphstate.build_dense(graphstate.cycle_graph(n))) > 1 - 1e-12


@pytest.mark.parametrize("n", range(2, 8))
def test_aklt_mps_matches_valence_bond_construction(n):
    open_chain = MPSChain.uniform(mps.aklt_tensors(), n, AKLT_LEFT, AKLT_RIGHT)
    state, _ = mps.to_dense(open_chain)
    assert qstate.fidelity_up_to_phase(state, aklt.build_aklt_dense(aklt.chain_layout(n))) > 1 - 1e-12
    if n >= 3:
        ring, _ = mps.to_dense(MPSChain.uniform(mps.aklt_tensors(), n))
        assert qstate.fidelity_up_to_phase(ring, aklt.build_aklt_dense(aklt.chain_layout(n, periodic=True))) > 1 - 1e-12


def test_aklt_tensor_in_sz_basis():
    a = mps.aklt_tensors("sz")
    assert np.allclose(a[0], [[0, 0], [-1, 0]])
    assert np.allclose(a[1], qstate.PAULI_Z / np.sqrt(2))
    assert np.allclose(a[2], [[0, 1], [0, 0]])
    # sum_s A[s]^dag A[s] = 3/2 * 1 for the Pauli tensor
    assert np.allclose(np.einsum("sji,sjk->ik", a.conj(), a), 1.5 * np.eye(2))


@given(st.floats(-np.pi, np.pi, allow_nan=False), st.integers(0, 1))
@settings(max_examples=50, deadline=None)
def test_correlation_op_is_phased_teleport_unitary(xi, s):
    ket = np.sqrt(2) * qstate.xy_ket(xi, 1 - 2 * s)  # (|0> ± e^{i xi}|1>) unnormalized
    got = mps.correlation_op(mps.cluster_tensors(), ket)
    expect = np.exp(-0.5j * xi) * mps.teleport_unitary(xi, s)
    assert np.abs(got - expect).max() < 1e-14


def test_blocked_matrices():
    blocks = mps.blocked_matrices()
    for key, m in mps.BLOCKED_EXPECTED.items():
        assert np.allclose(blocks[key], m)
    raw = mps.blocked_matrices(normalized=False)
    assert np.allclose(raw[("+", "+")], 0.5 * np.eye(2))


def test_symmetry_permutes_blocks():
    action = mps.symmetry_action_on_blocks(qstate.PAULI_X)
    assert action[("+", "-")] == (("+", "-"), -1)
    assert action[("-", "+")] == (("-", "+"), 1)
    with pytest.raises(ValueError):
        mps.symmetry_action_on_blocks(qstate.HADAMARD @ qstate.rz(0.3))


def test_mps_validation():
    with pytest.raises(ValueError, match="both"):
        MPSChain.uniform(mps.cluster_tensors(), 3, mps.CLUSTER_LEFT, None)
    with pytest.raises(ValueError, match="shape"):
        MPSChain((np.zeros((2, 2, 3)),))
    with pytest.raises(ValueError, match="does not match"):
        mps.correlation_op(mps.aklt_tensors(), qstate.KET0)


def test_mps_cap():
    with pytest.raises(qstate.CapExceededError):
        mps.to_dense(MPSChain.uniform(mps.aklt_tensors(), 10), cap=3**9)


def test_measured_chain_operator_matches_dense():
    """Contracting measured sites in the MPS equals projecting the dense state."""
    rng = np.random.default_rng(4)
    n = 5
    chain = MPSChain.uniform(mps.cluster_tensors(), n, mps.CLUSTER_LEFT, mps.CLUSTER_RIGHT)
    raw = mps.contract(chain).reshape((2,) * n)
    kets = [qstate.xy_ket(x) for x in rng.uniform(-np.pi, np.pi, n - 1)]
    out = raw
    for k in kets:
        out = np.tensordot(k.conj(), out, axes=(0, 0))
    expect = mps.CLUSTER_LEFT @ mps.measured_chain_operator(mps.cluster_tensors(), kets)
    expect = np.array([expect @ mps.cluster_tensors()[s] @ mps.CLUSTER_RIGHT for s in range(2)])
    assert np.allclose(out, expect)
