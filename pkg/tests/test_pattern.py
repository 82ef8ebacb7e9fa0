from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbqclab import pattern, qstate
from mbqclab.pattern import ByproductSpec, MeasurementPattern, Step

angles = st.floats(-np.pi, np.pi, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)


@given(angles, angles, angles, seeds)
@settings(max_examples=20, deadline=None)
def test_euler_pattern_all_branches(alpha, beta, gamma, seed):
    pat = pattern.compile_euler(alpha, beta, gamma)
    inp = qstate.random_state((2,), np.random.default_rng(seed))
    assert pattern.branch_fidelities(pat, inp).min() > 1 - 1e-10


@given(angles, angles, angles, seeds)
@settings(max_examples=10, deadline=None)
def test_absorbed_z_variant_all_branches(alpha, beta, gamma, seed):
    pat = pattern.compile_euler(alpha, beta, gamma, absorb_z=True)
    inp = qstate.random_state((2,), np.random.default_rng(seed))
    assert pattern.branch_fidelities(pat, inp).min() > 1 - 1e-10
    # with Z absorbed, only the last outcome enters the byproduct
    assert pat.byproduct.z[0] <= {2} and pat.byproduct.x[0] == {3}


def test_euler_adaptive_rules_explicit():
    a, b, g = 0.3, -1.2, 2.1
    pat = pattern.compile_euler(a, b, g)
    for s in itertools.product((0, 1), repeat=4):
        got = [st.actual_angle(s) for st in pat.steps]
        expect = [0.0, -((-1) ** s[0]) * g, -((-1) ** s[1]) * b, -((-1) ** (s[0] + s[2])) * a]
        assert np.allclose(got, expect)
        assert pat.byproduct.evaluate(s) == [((s[1] + s[3]) % 2, (s[0] + s[2]) % 2)]


def test_euler_chain_composes():
    rng = np.random.default_rng(3)
    blocks = [tuple(rng.uniform(-np.pi, np.pi, 3)) for _ in range(2)]
    pat = pattern.compile_euler_chain(blocks)
    inp = qstate.random_state((2,), rng)
    for _ in range(20):
        res = pattern.execute(pat, pattern.resource_for(pat, inp), rng)
        assert qstate.fidelity_up_to_phase(res.corrected(), pattern.apply_target(pat, inp)) > 1 - 1e-10


def test_teleport_pattern_raw_residual():
    xi = 0.7
    pat = pattern.teleport_pattern(xi)
    inp = qstate.random_state((2,), np.random.default_rng(0))
    for s in (0, 1):
        res = pattern.execute(pat, pattern.resource_for(pat, inp), [s])
        expect = qstate.PureState(inp.spec, pattern.teleport_unitary(xi, s) @ inp.amplitudes)
        assert qstate.fidelity_up_to_phase(res.residual, expect) > 1 - 1e-12
        assert res.probability == pytest.approx(0.5)


def test_cell_operator_matches_target_on_zero_branch():
    rng = np.random.default_rng(8)
    a = rng.uniform(-np.pi, np.pi, 6)
    cell = [[-a[0], -a[1], -a[2], 0.0], [-a[3], -a[4], -a[5], 0.0]]
    op = pattern.cell_operator(cell, [[0] * 4, [0] * 4])
    target = np.kron(pattern.euler_zxz(*a[:3]), pattern.euler_zxz(*a[3:]))
    assert qstate.phase_aligned_distance(op, target) < 1e-12
    cnot = pattern.cell_operator(pattern.CNOT_CELL_ANGLES, [[0] * 4, [0] * 4])
    assert qstate.phase_aligned_distance(cnot, qstate.CNOT) < 1e-12


def test_cnot_cell_all_branches():
    inp = qstate.random_state((2, 2), np.random.default_rng(1))
    assert pattern.branch_fidelities(pattern.brickwork_cnot_cell(), inp).min() > 1 - 1e-10


def test_pattern_json_roundtrip():
    pat = pattern.compile_euler(0.1, 0.2, 0.3)
    back = MeasurementPattern.from_json(json.loads(pattern.pattern_json_dumps(pat)))
    assert pattern.pattern_json_dumps(back) == pattern.pattern_json_dumps(pat)
    assert np.allclose(back.target, pat.target)


def test_pattern_json_missing_field_named():
    data = pattern.compile_euler(0.1, 0.2, 0.3).to_json()
    del data["byproduct"]
    with pytest.raises(ValueError, match="byproduct"):
        MeasurementPattern.from_json(data)


def test_pattern_validation():
    byp = ByproductSpec((frozenset(),), (frozenset(),))
    with pytest.raises(ValueError, match="twice"):
        MeasurementPattern((Step(0, 0.0), Step(0, 0.0)), 3, (0,), (2,), byp)
    with pytest.raises(ValueError, match="not earlier"):
        MeasurementPattern((Step(0, 0.0, frozenset({0})),), 2, (0,), (1,), byp)
    with pytest.raises(ValueError, match="output"):
        MeasurementPattern((Step(1, 0.0),), 2, (0,), (1,), byp)


def test_dependency_edges_point_forward():
    pat = pattern.compile_euler(0.1, 0.2, 0.3)
    assert all(j < i for j, i in pat.dependency_edges())
    assert (0, 1) in pat.dependency_edges()


def test_flip_readout_matches_corrected_state():
    pat = pattern.brickwork_cnot_cell()
    rng = np.random.default_rng(5)
    inp = qstate.random_state((2, 2), rng)
    res = pattern.execute(pat, pattern.resource_for(pat, inp), rng)
    raw = pattern.z_readout_distribution(res.residual)
    x_flips = [x for x, _ in res.byproducts]
    fixed = pattern.flip_readout(raw, 2, x_flips)
    assert np.allclose(fixed, pattern.z_readout_distribution(res.corrected()))


def test_unknown_resource_rejected():
    byp = ByproductSpec((frozenset(),), (frozenset(),))
    pat = MeasurementPattern((), 1, (0,), (0,), byp, {"kind": "torus"})
    with pytest.raises(ValueError, match="resource"):
        pattern.resource_for(pat)
