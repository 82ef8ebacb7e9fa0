from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbqclab import aklt, graphstate, qstate
from mbqclab.aklt import POVMOutcomeMap, ValenceBondLayout

SPIN32 = Fraction(3, 2)


def test_layout_validation():
    with pytest.raises(ValueError, match="cannot host"):
        ValenceBondLayout((Fraction(1),) * 3, ((0, 1), (0, 2), (0, 1)))
    with pytest.raises(ValueError, match="multiple of 1/2"):
        ValenceBondLayout((Fraction(1, 3),), ())
    with pytest.raises(ValueError, match="bond state"):
        ValenceBondLayout((Fraction(1),) * 2, ((0, 1),), "bogus")


def test_layout_json_roundtrip_and_bare_graph():
    lay = aklt.hexagon_patch()
    assert ValenceBondLayout.from_json(json.loads(json.dumps(lay.to_json()))) == lay
    bare = ValenceBondLayout.from_json({"n": 3, "edges": [[0, 1], [1, 2]]})
    assert bare.spins == (Fraction(1, 2), Fraction(1), Fraction(1, 2))


def test_symmetric_projector_is_isometry_onto_dicke_states():
    for spin in (Fraction(1), SPIN32):
        p = aklt.symmetric_projector(spin)
        assert np.allclose(p @ p.conj().T, np.eye(p.shape[0]))


@pytest.mark.parametrize("layout", [aklt.chain_layout(4), aklt.chain_layout(5, periodic=True), aklt.hexagon_patch(), aklt.complete_bipartite_33()], ids=["chain4", "ring5", "hexagon", "k33"])
def test_aklt_state_is_frustration_free(layout):
    state = aklt.build_aklt_dense(layout)
    assert aklt.hamiltonian_residual(state, aklt.aklt_hamiltonian(layout)) < 1e-12


def test_edge_terms_are_projectors_up_to_scale():
    a, p2 = aklt.projector_polynomial(1)
    assert a == pytest.approx(1 / 24)
    assert np.allclose(aklt.edge_term(1), p2)
    assert np.allclose(p2, aklt.total_spin_projector(1, 1, 2))
    b, p3 = aklt.projector_polynomial(SPIN32)
    assert b == pytest.approx(1 / 720)
    assert np.allclose(aklt.edge_term(SPIN32), 160 / 27 * p3)


def test_chain_spectrum_unique_ground_state_with_gap():
    ev = aklt.chain_spectrum(6)
    assert abs(ev[0]) < 1e-10
    assert ev[1] > 0.3


@pytest.mark.parametrize("spin", [1, SPIN32])
def test_povm_complete(spin):
    assert aklt.completeness_defect(aklt.povm(spin).values()) < 1e-12


def test_general_form_not_complete_for_spin_two():
    kraus = aklt.general_povm(2).values()
    assert aklt.proportionality_defect(kraus) > 0.1
    with pytest.raises(ValueError):
        aklt.povm(2)


def test_outcome_map_parse():
    assert str(POVMOutcomeMap.parse("xyz")) == "xyz"
    with pytest.raises(ValueError, match="x, y or z"):
        POVMOutcomeMap.parse("xq")


def test_outcome_probabilities_sum_to_one():
    lay = aklt.chain_layout(4)
    total = sum(p for _, p in aklt.nonzero_outcome_maps(lay))
    assert total == pytest.approx(1)


def test_domain_contract_parity_and_frozen():
    lay = aklt.chain_layout(5)
    dg = aklt.domain_contract(lay, POVMOutcomeMap.parse("xxzyy"))
    assert dg.domains == ((0, 1), (2,), (3, 4))
    assert dg.graph.sorted_edges() == [(0, 1), (1, 2)]
    assert dg.frozen == (False, False, False)
    dg = aklt.domain_contract(lay, POVMOutcomeMap.parse("zzxyy"))
    assert dg.frozen[0]  # z domain touching the dangling end
    # a double bond between two domains cancels
    ring = aklt.chain_layout(4, periodic=True)
    dg = aklt.domain_contract(ring, POVMOutcomeMap.parse("xyyy"))
    assert dg.graph.sorted_edges() == []


@pytest.mark.parametrize("n", [2, 3, 4])
def test_encoding_exhaustive_small_chains(n):
    lay = aklt.chain_layout(n)
    state = aklt.build_aklt_dense(lay)
    for om, _ in aklt.nonzero_outcome_maps(lay, state):
        enc = aklt.encoding_check(lay, om, state)
        assert enc.fidelity > 1 - 1e-9
        assert enc.phase_defect < 1e-9


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_encoding_sampled_hexagon(seed):
    lay = aklt.hexagon_patch()
    rng = np.random.default_rng(seed)
    state = aklt.build_aklt_dense(lay)
    om, post, _ = aklt.povm_all_sites(state, lay, rng)
    enc = aklt.reduce_encoding(post, lay, om, rng)
    assert enc.fidelity > 1 - 1e-9


def test_reduce_domain_keeps_logical_amplitudes():
    up, dn = aklt.extremal_pair(1, "x")
    a, b = 0.6, 0.8j
    vec = a * qstate.kron(up, dn) + b * qstate.kron(dn, up)
    state = qstate.PureState.from_vector((3, 3), vec)
    for o in (0, 1):
        out, parity = aklt.reduce_domain(state, [0, 1], 1, "x", o)
        assert parity == o
        assert qstate.fidelity_up_to_phase(out, qstate.PureState.from_vector((2,), [a, b])) > 1 - 1e-12


@pytest.mark.parametrize("a", [1.0, np.sqrt(3), 3.0])
@pytest.mark.parametrize("n", [2, 4])
def test_nkz_frustration_free(a, n):
    assert aklt.nkz_check(a, aklt.spin32_path(n)) < 1e-9


def test_nkz_at_sqrt3_is_aklt():
    lay = aklt.spin32_path(3)
    assert np.allclose(aklt.deformation(np.sqrt(3)), np.eye(4))
    assert qstate.fidelity_up_to_phase(aklt.deformed_state(lay, np.sqrt(3)), aklt.build_aklt_dense(lay)) > 1 - 1e-12


def test_deformation_rejects_bad_input():
    with pytest.raises(ValueError):
        aklt.deformation(0)
    with pytest.raises(ValueError, match="spin-3/2"):
        aklt.deformed_state(aklt.chain_layout(3), 1.0)


def test_encoded_graph_is_domain_graph():
    lay = aklt.trivalent_layout(graphstate.cycle_graph(6))
    enc = aklt.encoding_check(lay, POVMOutcomeMap.parse("xxyyxy"))
    assert enc.graph == enc.domain_graph.graph.induced(list(enc.live))


def test_aklt_cap():
    with pytest.raises(qstate.CapExceededError):
        aklt.build_aklt_dense(aklt.chain_layout(6), cap=100)
