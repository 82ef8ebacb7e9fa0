"""Percolation Monte Carlo for faulty lattices and measurement-induced random graphs.

Square-lattice site and bond models use the Newman-Ziff ordering: each
trial draws one uniform number per site (or bond), occupies them in
increasing order and records the value at which the left column first
connects to the right column. The trial spans at ``p`` iff that value is
below ``p``, so one pass gives the whole spanning curve and the curves are
monotone in ``p`` by construction.

Other models (Union-Jack cross-site XOR bonds, AKLT domain graphs, arbitrary
base graphs) are sampled graph by graph and checked with connected components.
"""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Sequence
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.optimize
import scipy.sparse
import scipy.sparse.csgraph
import scipy.stats

from mbqclab import aklt, graphstate
from mbqclab.graphstate import Graph

MODEL_KINDS = ("site", "bond", "mm-cross", "aklt-domain")


# --- lattices ------------------------------------------------------------------------------------

@dataclass(frozen=True)
class Lattice:
    graph: Graph
    left: frozenset[int]
    right: frozenset[int]

    def __post_init__(self) -> None:
        if self.left & self.right:
            raise ValueError("left and right boundaries must be disjoint")
        if any(not 0 <= v < self.graph.n for v in self.left | self.right):
            raise ValueError("boundary vertex out of range")


def square_lattice(size: int) -> Lattice:
    """size x size open square grid; vertex r * size + c."""
    g = graphstate.grid_graph(size, size)
    return Lattice(g, frozenset(r * size for r in range(size)), frozenset(r * size + size - 1 for r in range(size)))


def honeycomb_lattice(rows: int, cols: int) -> Lattice:
    """Open brick-wall honeycomb: horizontal bonds, vertical bond up when r + c is even."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if (r + c) % 2 == 0 and r + 1 < rows:
                edges.append((v, v + cols))
    g = Graph.from_edges(rows * cols, edges)
    return Lattice(g, frozenset(r * cols for r in range(rows)), frozenset(r * cols + cols - 1 for r in range(rows)))


def path_lattice(n: int) -> Lattice:
    return Lattice(graphstate.path_graph(n), frozenset({0}), frozenset({n - 1}))


# --- models and samples ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RandomGraphModel:
    """``kind`` in site, bond, mm-cross, aklt-domain.

    ``p`` is the occupation probability for site and bond, the probability
    of outcome 1 on each cross site for mm-cross, and the probability that a
    site is present for aklt-domain (1 for a perfect lattice).
    """

    kind: str
    p: float
    lattice: Lattice
    exact: bool = False  # aklt-domain: sample outcomes from the dense state

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")


@dataclass(frozen=True)
class GraphSample:
    graph: Graph
    left: frozenset[int]
    right: frozenset[int]
    approximate: bool = False


def _site_sample(lat: Lattice, keep: np.ndarray) -> GraphSample:
    kept = [v for v in range(lat.graph.n) if keep[v]]
    index = {v: i for i, v in enumerate(kept)}
    return GraphSample(
        lat.graph.induced(kept),
        frozenset(index[v] for v in lat.left if v in index),
        frozenset(index[v] for v in lat.right if v in index),
    )


def union_jack_cross_bonds(size: int, cross_bits: np.ndarray) -> Graph:
    """Square-site graph of the Union-Jack patch: a bond iff the flanking cross bits differ.

    ``cross_bits`` has shape (size - 1, size - 1), one bit per cell.
    """
    edges = []
    for r in range(size):
        for c in range(size):
            v = r * size + c
            if c + 1 < size:  # horizontal edge between cells (r-1, c) and (r, c)
                flank = [cross_bits[rr, c] for rr in (r - 1, r) if 0 <= rr < size - 1]
                if sum(flank) % 2:
                    edges.append((v, v + 1))
            if r + 1 < size:  # vertical edge between cells (r, c-1) and (r, c)
                flank = [cross_bits[r, cc] for cc in (c - 1, c) if 0 <= cc < size - 1]
                if sum(flank) % 2:
                    edges.append((v, v + size))
    return Graph.from_edges(size * size, edges)


def sample(model: RandomGraphModel, rng: np.random.Generator | int) -> GraphSample:
    """One random graph from ``model``."""
    rng = np.random.default_rng(rng)
    lat = model.lattice
    n = lat.graph.n
    if model.kind == "site":
        return _site_sample(lat, rng.random(n) < model.p)
    if model.kind == "bond":
        edges = lat.graph.sorted_edges()
        keep = rng.random(len(edges)) < model.p
        g = Graph.from_edges(n, [e for e, k in zip(edges, keep) if k])
        return GraphSample(g, lat.left, lat.right)
    if model.kind == "mm-cross":
        size = int(round(np.sqrt(n)))
        if size * size != n:
            raise ValueError("mm-cross needs a square lattice")
        bits = (rng.random((size - 1, size - 1)) < model.p).astype(int)
        return GraphSample(union_jack_cross_bonds(size, bits), lat.left, lat.right)
    # aklt-domain: spin-3/2 on every kept site, dangling virtual qubits at the boundary
    base = _site_sample(lat, rng.random(n) < model.p)
    layout = aklt.trivalent_layout(base.graph)
    if model.exact:
        state = aklt.build_aklt_dense(layout)
        outcomes, _, _ = aklt.povm_all_sites(state, layout, rng)
    else:
        # i.i.d. uniform outcomes: an approximation of the correlated POVM statistics
        outcomes = aklt.POVMOutcomeMap(tuple(aklt.AXES[i] for i in rng.integers(0, 3, base.graph.n)))
    dg = aklt.domain_contract(layout, outcomes)
    index = {v: dg.domain_of(v) for v in range(base.graph.n)}
    return GraphSample(
        dg.graph,
        frozenset(index[v] for v in base.left),
        frozenset(index[v] for v in base.right),
        approximate=not model.exact,
    )


def spans(g: Graph, left: Sequence[int] | frozenset[int], right: Sequence[int] | frozenset[int]) -> bool:
    """True iff one connected component meets both boundary sets."""
    left, right = set(left), set(right)
    if any(not 0 <= v < g.n for v in left | right):
        raise ValueError("boundary vertex out of range")
    if not left or not right:
        return False
    edges = np.array(g.sorted_edges(), dtype=np.int64).reshape(-1, 2)
    adj = scipy.sparse.coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(g.n, g.n))
    _, labels = scipy.sparse.csgraph.connected_components(adj, directed=False)
    return bool({labels[v] for v in left} & {labels[v] for v in right})


# --- Newman-Ziff kernels --------------------------------------------------------------------------

@numba.njit(cache=True)
def _find(parent, v):
    root = v
    while parent[root] != root:
        root = parent[root]
    while parent[v] != root:
        nxt = parent[v]
        parent[v] = root
        v = nxt
    return root


@numba.njit(cache=True)
def _union(parent, rank, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra == rb:
        return
    if rank[ra] < rank[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    if rank[ra] == rank[rb]:
        rank[ra] += 1


@numba.njit(cache=True)
def site_thresholds(u):
    """Spanning point of each trial; ``u`` has shape (trials, L, L)."""
    trials, size = u.shape[0], u.shape[1]
    n = size * size
    left, right = n, n + 1
    out = np.empty(trials)
    parent = np.empty(n + 2, dtype=np.int64)
    rank = np.empty(n + 2, dtype=np.int64)
    occupied = np.empty(n, dtype=np.bool_)
    for t in range(trials):
        flat = u[t].ravel()
        order = np.argsort(flat)
        for i in range(n + 2):
            parent[i] = i
            rank[i] = 0
        occupied[:] = False
        out[t] = 1.0
        for k in range(n):
            v = order[k]
            occupied[v] = True
            r, c = v // size, v % size
            if c == 0:
                _union(parent, rank, v, left)
            if c == size - 1:
                _union(parent, rank, v, right)
            if c > 0 and occupied[v - 1]:
                _union(parent, rank, v, v - 1)
            if c < size - 1 and occupied[v + 1]:
                _union(parent, rank, v, v + 1)
            if r > 0 and occupied[v - size]:
                _union(parent, rank, v, v - size)
            if r < size - 1 and occupied[v + size]:
                _union(parent, rank, v, v + size)
            if _find(parent, left) == _find(parent, right):
                out[t] = flat[v]
                break
    return out


@numba.njit(cache=True)
def bond_thresholds(u):
    """Spanning point of each trial for bonds; ``u`` has shape (trials, 2 L (L - 1)).

    Bond k < L (L - 1) is horizontal (r, c)-(r, c + 1) with k = r (L - 1) + c;
    the rest are vertical (r, c)-(r + 1, c) with k - L (L - 1) = r L + c.
    """
    trials = u.shape[0]
    half = u.shape[1] // 2
    size = int(round(0.5 + np.sqrt(0.25 + half)))
    n = size * size
    left, right = n, n + 1
    out = np.empty(trials)
    parent = np.empty(n + 2, dtype=np.int64)
    rank = np.empty(n + 2, dtype=np.int64)
    for t in range(trials):
        order = np.argsort(u[t])
        for i in range(n + 2):
            parent[i] = i
            rank[i] = 0
        for r in range(size):
            _union(parent, rank, r * size, left)
            _union(parent, rank, r * size + size - 1, right)
        out[t] = 1.0
        for k in range(2 * half):
            b = order[k]
            if b < half:
                r, c = b // (size - 1), b % (size - 1)
                a, d = r * size + c, r * size + c + 1
            else:
                j = b - half
                a = j
                d = j + size
            _union(parent, rank, a, d)
            if _find(parent, left) == _find(parent, right):
                out[t] = u[t, b]
                break
    return out


def spanning_points(kind: str, size: int, trials: int, rng: np.random.Generator, chunk: int = 500) -> np.ndarray:
    """Per-trial spanning points for the square-lattice site or bond model."""
    if size < 2:
        raise ValueError("lattice size must be at least 2")
    out = []
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        if kind == "site":
            out.append(site_thresholds(rng.random((m, size, size))))
        elif kind == "bond":
            out.append(bond_thresholds(rng.random((m, 2 * size * (size - 1)))))
        else:
            raise ValueError(f"no Newman-Ziff kernel for {kind!r}")
        done += m
    return np.concatenate(out)


# --- estimates ----------------------------------------------------------------------------------

def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = scipy.stats.binomtest(int(successes), int(trials)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class CurvePoint:
    p: float
    successes: int
    trials: int
    estimate: float
    low: float
    high: float


@dataclass(frozen=True)
class PercolationReport:
    model: str
    sizes: tuple[int, ...]
    pgrid: tuple[float, ...]
    trials: int
    seed: int
    curves: dict[int, tuple[CurvePoint, ...]]
    crossings: dict[str, float | None] = field(default_factory=dict)
    threshold: float | None = None
    approximate: bool = False

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "sizes": list(self.sizes),
            "pgrid": list(self.pgrid),
            "trials": self.trials,
            "seed": self.seed,
            "approximate": self.approximate,
            "curves": {
                str(size): [
                    {"p": c.p, "successes": c.successes, "trials": c.trials, "estimate": c.estimate, "ci_low": c.low, "ci_high": c.high}
                    for c in pts
                ]
                for size, pts in self.curves.items()
            },
            "crossings": self.crossings,
            "threshold": self.threshold,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["size", "p", "successes", "trials", "estimate", "ci_low", "ci_high"])
        for size, pts in self.curves.items():
            for c in pts:
                w.writerow([size, repr(c.p), c.successes, c.trials, repr(c.estimate), repr(c.low), repr(c.high)])
        return buf.getvalue()

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def isotonic(values: Sequence[float], weights: Sequence[float] | None = None) -> np.ndarray:
    """Non-decreasing least-squares fit (scipy's pool-adjacent-violators)."""
    return scipy.optimize.isotonic_regression(np.asarray(values, float), weights=weights, increasing=True).x


def curve_crossing(pgrid: Sequence[float], small: Sequence[float], large: Sequence[float]) -> float | None:
    """Where the larger-size curve overtakes the smaller one, by linear interpolation.

    Below the threshold the small system spans more often; above it the
    large one does. Returns None without such a sign change.
    """
    p = np.asarray(pgrid, float)
    d = np.asarray(small, float) - np.asarray(large, float)
    idx = [i for i in range(len(d)) if d[i] != 0]
    for a, b in zip(idx, idx[1:]):
        if d[a] > 0 > d[b]:
            return float(p[a] + (p[b] - p[a]) * d[a] / (d[a] - d[b]))
    return None


def _curve(successes: np.ndarray, trials: int, pgrid: Sequence[float]) -> tuple[CurvePoint, ...]:
    pts = []
    for p, k in zip(pgrid, successes):
        lo, hi = wilson_interval(int(k), trials)
        pts.append(CurvePoint(float(p), int(k), trials, float(k) / trials, lo, hi))
    return tuple(pts)


def _lattice_for(kind: str, size: int) -> Lattice:
    if kind == "aklt-domain":
        return honeycomb_lattice(size, size)
    return square_lattice(size)


def estimate_threshold(
    kind: str,
    sizes: Sequence[int],
    pgrid: Sequence[float],
    trials: int,
    seed: int,
    exact: bool = False,
) -> PercolationReport:
    """Spanning curves per size and a threshold from pairwise curve crossings.

    Seeds: ``SeedSequence(seed).spawn(len(sizes))`` gives one stream per size.
    Site and bond models reuse each trial's random numbers across the whole
    grid; the other models draw a fresh graph per (size, p, trial).
    """
    sizes = tuple(int(s) for s in sizes)
    pgrid = tuple(float(p) for p in pgrid)
    if len(sizes) < 2 or len(set(sizes)) != len(sizes):
        raise ValueError("need at least two distinct sizes for a crossing estimate")
    if len(set(pgrid)) < 2 or sorted(pgrid) != list(pgrid) or not all(0 <= p <= 1 for p in pgrid):
        raise ValueError("p-grid must hold at least two increasing values in [0, 1]")
    if trials <= 0:
        raise ValueError("trials must be positive")
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(len(sizes))]
    curves: dict[int, tuple[CurvePoint, ...]] = {}
    for size, rng in zip(sizes, streams):
        if kind in ("site", "bond"):
            points = spanning_points(kind, size, trials, rng)
            succ = np.array([(points < p).sum() if p < 1 else trials for p in pgrid])
        else:
            lat = _lattice_for(kind, size)
            succ = np.zeros(len(pgrid), dtype=int)
            for i, p in enumerate(pgrid):
                model = RandomGraphModel(kind, p, lat, exact)
                for _ in range(trials):
                    smp = sample(model, rng)
                    succ[i] += spans(smp.graph, smp.left, smp.right)
        curves[size] = _curve(succ, trials, pgrid)
    smooth = {
        s: isotonic([c.estimate for c in pts]) for s, pts in curves.items()
    }
    crossings: dict[str, float | None] = {}
    for i, a in enumerate(sizes):
        for b in sizes[i + 1:]:
            small, large = (a, b) if a < b else (b, a)
            crossings[f"{small}-{large}"] = curve_crossing(pgrid, smooth[small], smooth[large])
    found = [v for v in crossings.values() if v is not None]
    threshold = float(np.mean(found)) if found else None
    return PercolationReport(
        kind, sizes, pgrid, trials, int(seed), curves, crossings, threshold,
        approximate=(kind == "aklt-domain" and not exact),
    )


DEFAULT_GRIDS = {
    "site": tuple(np.round(np.linspace(0.55, 0.63, 17), 6)),
    "bond": tuple(np.round(np.linspace(0.46, 0.54, 17), 6)),
    "mm-cross": tuple(np.round(np.linspace(0.1, 0.5, 9), 6)),
    "aklt-domain": tuple(np.round(np.linspace(0.6, 1.0, 9), 6)),
}


def bond_frequency_mm(size: int, trials: int, rng: np.random.Generator) -> tuple[float, float]:
    """Per-edge bond frequency of the cross-site model with fair bits, and its standard error.

    The error is taken from the spread of per-sample frequencies, since
    edges sharing a cross site are correlated.
    """
    n_edges = 2 * size * (size - 1)
    freq = np.array([
        len(union_jack_cross_bonds(size, rng.integers(0, 2, (size - 1, size - 1))).edges) / n_edges
        for _ in range(trials)
    ])
    return float(freq.mean()), float(freq.std(ddof=1) / np.sqrt(trials))
