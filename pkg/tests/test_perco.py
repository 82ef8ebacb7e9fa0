from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbqclab import graphstate, perco, spt
from mbqclab.graphstate import Graph

seeds = st.integers(0, 2**32 - 1)
probs = st.floats(0.0, 1.0, allow_nan=False)


@given(seeds, probs, st.integers(2, 7))
@settings(max_examples=60, deadline=None)
def test_site_kernel_matches_brute_force(seed, p, size):
    u = np.random.default_rng(seed).random((1, size, size))
    point = perco.site_thresholds(u)[0]
    lat = perco.square_lattice(size)
    sample = perco._site_sample(lat, u[0].ravel() < p)
    assert perco.spans(sample.graph, sample.left, sample.right) == (point < p)


@given(seeds, probs, st.integers(2, 7))
@settings(max_examples=60, deadline=None)
def test_bond_kernel_matches_brute_force(seed, p, size):
    half = size * (size - 1)
    u = np.random.default_rng(seed).random((1, 2 * half))
    point = perco.bond_thresholds(u)[0]
    edges = []
    for k in range(2 * half):
        if u[0, k] < p:
            if k < half:
                r, c = divmod(k, size - 1)
                edges.append((r * size + c, r * size + c + 1))
            else:
                edges.append((k - half, k - half + size))
    lat = perco.square_lattice(size)
    assert perco.spans(Graph.from_edges(size * size, edges), lat.left, lat.right) == (point < p)


def test_spans_basic():
    g = graphstate.path_graph(4)
    assert perco.spans(g, [0], [3])
    assert not perco.spans(g.without_vertex_edges(2), [0], [3])
    assert not perco.spans(g, [], [3])
    with pytest.raises(ValueError):
        perco.spans(g, [0], [9])


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_cross_bonds_match_spt_rewrite(seed):
    size = 3
    bits = np.random.default_rng(seed).integers(0, 2, (size - 1, size - 1))
    g = perco.union_jack_cross_bonds(size, bits)
    t = spt.union_jack_patch(size)
    outcomes = {x: int(bits[(x - size * size) // (size - 1), (x - size * size) % (size - 1)]) for x in t.cross_sites}
    desc, _ = spt.cross_site_z_measure(t, outcomes, "mm")
    assert desc.graph == g


def test_mm_bond_frequency_is_one_half():
    mean, err = perco.bond_frequency_mm(8, 400, np.random.default_rng(0))
    assert abs(mean - 0.5) < 4 * err + 1e-3


def test_model_validation():
    lat = perco.square_lattice(3)
    with pytest.raises(ValueError, match="unknown model"):
        perco.RandomGraphModel("foo", 0.5, lat)
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        perco.RandomGraphModel("site", 1.5, lat)
    with pytest.raises(ValueError, match="disjoint"):
        perco.Lattice(graphstate.path_graph(2), frozenset({0}), frozenset({0}))


@pytest.mark.parametrize("kind", ["site", "bond"])
def test_sample_extremes(kind):
    lat = perco.square_lattice(4)
    full = perco.sample(perco.RandomGraphModel(kind, 1.0, lat), 0)
    assert perco.spans(full.graph, full.left, full.right)
    empty = perco.sample(perco.RandomGraphModel(kind, 0.0, lat), 0)
    assert not perco.spans(empty.graph, empty.left, empty.right)


def test_mm_cross_uniform_bits():
    lat = perco.square_lattice(4)
    assert not perco.sample(perco.RandomGraphModel("mm-cross", 0.0, lat), 0).graph.edges
    # all bits 1: interior edges see two equal bits, boundary edges only one
    ones = perco.sample(perco.RandomGraphModel("mm-cross", 1.0, lat), 0).graph
    boundary = [e for e in lat.graph.sorted_edges() if all(v // 4 in (0, 3) for v in e) or all(v % 4 in (0, 3) for v in e)]
    assert ones.sorted_edges() == boundary


def test_aklt_domain_sample_flags():
    lat = perco.honeycomb_lattice(2, 3)
    approx = perco.sample(perco.RandomGraphModel("aklt-domain", 1.0, lat), 1)
    exact = perco.sample(perco.RandomGraphModel("aklt-domain", 1.0, lat, exact=True), 1)
    assert approx.approximate and not exact.approximate


def test_wilson_interval_contains_estimate():
    lo, hi = perco.wilson_interval(30, 100)
    assert lo < 0.3 < hi
    lo, hi = perco.wilson_interval(0, 50)
    assert lo == 0 and 0 < hi < 0.1


def test_isotonic_and_crossing():
    assert np.all(np.diff(perco.isotonic([0.1, 0.3, 0.2, 0.5])) >= 0)
    p = [0.4, 0.5, 0.6]
    assert perco.curve_crossing(p, [0.3, 0.5, 0.7], [0.1, 0.5, 0.9]) == pytest.approx(0.5)
    assert perco.curve_crossing(p, [0.1, 0.2, 0.3], [0.0, 0.1, 0.2]) is None


def test_estimate_is_deterministic_and_serializable():
    a = perco.estimate_threshold("site", [8, 16], perco.DEFAULT_GRIDS["site"], 300, seed=11)
    b = perco.estimate_threshold("site", [8, 16], perco.DEFAULT_GRIDS["site"], 300, seed=11)
    assert a.dumps() == b.dumps()
    data = json.loads(a.dumps())
    assert data["seed"] == 11 and set(data["curves"]) == {"8", "16"}
    for pts in a.curves.values():
        assert all(x.successes <= y.successes for x, y in zip(pts, pts[1:]))
    assert a.to_csv().splitlines()[0] == "size,p,successes,trials,estimate,ci_low,ci_high"


def test_estimate_on_full_grid_has_no_crossing():
    rep = perco.estimate_threshold("bond", [4, 8], [0.0, 1.0], 50, seed=0)
    assert rep.threshold is None


def test_estimate_validation():
    with pytest.raises(ValueError, match="two distinct sizes"):
        perco.estimate_threshold("site", [8], [0.5, 0.6], 10, 0)
    with pytest.raises(ValueError, match="increasing"):
        perco.estimate_threshold("site", [4, 8], [0.6, 0.5], 10, 0)
    with pytest.raises(ValueError, match="trials"):
        perco.estimate_threshold("site", [4, 8], [0.5, 0.6], 0, 0)
