from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbqclab import graphstate, qstate, spt


def test_z2_cocycle_is_minus_one_to_abc():
    om = spt.cyclic_omega(2)
    for a, b, c in itertools.product((0, 1), repeat=3):
        assert om[a, b, c] == pytest.approx((-1) ** (a * b * c))


@pytest.mark.parametrize("order,level", [(2, 1), (3, 1), (3, 2), (4, 1), (5, 3)])
def test_cyclic_cocycles_closed_and_invariant(order, level):
    c = spt.cyclic_cocycle(order, level)
    assert spt.cocycle_defect(c) < 1e-12
    assert spt.invariance_defect(c) < 1e-12


def test_random_cochain_fails_cocycle_condition():
    rng = np.random.default_rng(0)
    nu = np.exp(2j * np.pi * rng.random((2,) * 4))
    assert spt.cocycle_defect(spt.CocycleTable(2, nu)) > 1e-3


def test_cocycle_json_roundtrip():
    c = spt.cyclic_cocycle(3)
    back = spt.CocycleTable.from_json(json.loads(json.dumps(c.to_json())))
    assert np.allclose(back.nu, c.nu)
    with pytest.raises(ValueError, match="unit modulus"):
        spt.CocycleTable(2, np.full((2,) * 4, 2.0))


def test_face_tracing_counts():
    sq = spt.square_torus()
    assert (sq.n_sites, sq.n_partons, sq.n_plaquettes) == (4, 16, 4)
    hc = spt.honeycomb_torus()
    assert (hc.n_sites, hc.n_partons, hc.n_plaquettes) == (4, 12, 2)
    # every plaquette of the square torus has four corners
    assert all(len(sq.partons_of_plaquette(p)) == 4 for p in range(4))


def test_plaquette_lattice_json_roundtrip():
    lat = spt.honeycomb_torus()
    assert spt.PlaquetteLattice.from_json(json.loads(json.dumps(lat.to_json()))) == lat


@pytest.mark.parametrize("order", [2, 3])
@pytest.mark.parametrize("k", [3, 4])
@given(data=st.data())
@settings(max_examples=5, deadline=None)
def test_linear_composition_any_branching(order, k, data):
    br = frozenset(data.draw(st.sets(st.integers(0, k - 1))))
    assert spt.linear_defect(k, spt.cyclic_cocycle(order), br) < 1e-12


@pytest.mark.parametrize("order", [2, 3])
def test_symmetry_action_is_unitary_representation(order):
    lat = spt.honeycomb_torus()
    c = spt.cyclic_cocycle(order)
    for g in range(order):
        u = spt.symmetry_action(lat, 0, g, c)
        assert u.is_unitary()


def test_global_invariance_square_z2_and_honeycomb_z3():
    assert spt.global_symmetry_fidelity(spt.square_torus(), 1, spt.cyclic_cocycle(2)) > 1 - 1e-10
    c3 = spt.cyclic_cocycle(3)
    for g in (1, 2):
        assert spt.global_symmetry_fidelity(spt.honeycomb_torus(), g, c3) > 1 - 1e-10


def test_alternating_branching_breaks_z3_invariance():
    fid = spt.global_symmetry_fidelity(spt.honeycomb_torus(), 1, spt.cyclic_cocycle(3), branching="alternating")
    assert fid < 0.5


def test_branching_out_of_range():
    with pytest.raises(ValueError, match="branching"):
        spt.symmetry_action(spt.square_torus(), 0, 1, spt.cyclic_cocycle(2), branching=frozenset({7}))


def test_czx_invariance_and_involution():
    assert spt.czx_invariance_fidelity(spt.square_torus()) > 1 - 1e-10
    u = spt.czx_site_action(4)
    assert np.allclose(u @ u, np.eye(16))
    with pytest.raises(ValueError):
        spt.czx_site_action(2)


@pytest.mark.parametrize("outcome", [0, 1])
def test_ghz_concentration(outcome):
    k, post = spt.ghz_concentrate(spt.ghz_state(4), 1, outcome)
    assert spt.ghz_fidelity(post, (-1) ** k) > 1 - 1e-12


@pytest.mark.parametrize("outcome", range(4))
def test_ghz_merge_all_bell_outcomes(outcome):
    state = qstate.PureState(qstate.SiteSpec((2,) * 6), np.kron(spt.ghz_state(3).amplitudes, spt.ghz_state(3).amplitudes))
    rec, post = spt.ghz_merge(state, 2, 3, outcome)
    if rec.flip_second_block:
        for q in (2, 3):
            post = qstate.apply(post, qstate.LocalOperator((q,), qstate.PAULI_X))
    assert spt.ghz_fidelity(post, rec.sign) > 1 - 1e-12


def test_triangulation_validation():
    with pytest.raises(ValueError, match="exactly two"):
        spt.TriangulatedLattice(3, ((0, 1, 2),), True)
    with pytest.raises(ValueError, match="bad triangle"):
        spt.TriangulatedLattice(3, ((0, 1, 1),), False)


def test_triangular_torus_counts():
    t = spt.triangular_torus(3)
    assert (t.n, len(t.edges), len(t.triangles)) == (9, 27, 18)
    assert all(t.graph.degree(v) == 6 for v in range(t.n))


@pytest.mark.parametrize("lattice", [spt.triangular_torus, spt.union_jack_patch, spt.single_triangle])
def test_mm_and_identities(lattice):
    t = lattice()
    assert spt.mm_check(t) < 1e-12
    assert max(spt.verify_ccz_identities(t).values()) < 1e-12


def test_lg_ground_state_unique_with_gap_two():
    t = spt.triangular_torus(3)
    assert spt.lg_check(t) < 1e-12
    ev = np.linalg.eigvalsh(spt.lg_hamiltonian(t))
    assert ev[0] == pytest.approx(-9)
    assert ev[1] - ev[0] == pytest.approx(2)


def test_lg_state_differs_from_mm_state():
    t = spt.triangular_torus(3)
    fid = qstate.fidelity_up_to_phase(spt.build_mm_state(t), spt.build_lg_state(t))
    assert fid < 0.9


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_cross_measurements_union_jack_patch(seed):
    t = spt.union_jack_patch()
    rng = np.random.default_rng(seed)
    outcomes = {x: int(rng.integers(2)) for x in t.cross_sites}
    assert spt.cross_measure_fidelity(t, outcomes, "mm") > 1 - 1e-10
    assert spt.cross_measure_fidelity(t, outcomes, "lg") > 1 - 1e-10
    assert spt.complement_relation_holds(t, outcomes)


def test_mm_bonds_are_xor_of_flanking_outcomes():
    t = spt.union_jack_patch()
    outcomes = {x: 0 for x in t.cross_sites}
    desc, bonds = spt.cross_site_z_measure(t, outcomes, "mm")
    assert not any(bonds.values()) and not desc.graph.edges
    desc, _ = spt.cross_site_z_measure(t, outcomes, "lg")
    square = graphstate.grid_graph(3, 3)
    assert desc.graph == square


def test_cross_measure_requires_all_cross_sites():
    t = spt.union_jack_patch()
    with pytest.raises(ValueError, match="every cross site"):
        spt.cross_site_z_measure(t, {t.cross_sites[0]: 0})
    with pytest.raises(ValueError, match="not cross sites"):
        spt.cross_site_z_measure(t, {0: 1})


def test_triangulation_json_roundtrip():
    t = spt.union_jack_patch()
    assert spt.TriangulatedLattice.from_json(json.loads(json.dumps(t.to_json()))) == t
