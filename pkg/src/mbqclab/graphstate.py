"""Symbolic graph states and their Pauli-measurement rewrite rules.

A :class:`GraphStateDesc` records a graph state up to diagonal local
corrections ``S^k`` (``k`` mod 4, with ``Z = S^2``); global phases are
discarded. The Z rule deletes a vertex, the Y rule locally complements the
neighbourhood before deleting it. Both are checked against the dense
simulator in the test-suite rather than assumed.

Y-rule outcome convention (fixed against the dense oracle): outcome 0
(eigenvalue +1 of Y, ket (|0> + i|1>)/sqrt2) leaves ``S`` on every former
neighbour, outcome 1 leaves ``S^dagger``.
"""

from __future__ import annotations

import itertools
import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from mbqclab import qstate
from mbqclab.qstate import PureState


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self) -> None:
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
            e = (min(u, v), max(u, v))
            if e in norm:
                raise ValueError(f"duplicate edge {e}")
            norm.add(e)
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> Graph:
        return cls(n, frozenset((int(u), int(v)) for u, v in edges))

    def neighbors(self, v: int) -> set[int]:
        self._check(v)
        return {b if a == v else a for a, b in self.edges if v in (a, b)}

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def without_vertex_edges(self, v: int) -> Graph:
        return Graph(self.n, frozenset(e for e in self.edges if v not in e))

    def toggled(self, pairs: Iterable[tuple[int, int]]) -> Graph:
        edges = set(self.edges)
        for u, v in pairs:
            edges ^= {(min(u, v), max(u, v))}
        return Graph(self.n, frozenset(edges))

    def induced(self, vertices: Sequence[int]) -> Graph:
        """Subgraph on ``vertices`` relabelled to 0..len-1 in the given order."""
        index = {v: i for i, v in enumerate(vertices)}
        edges = [(index[u], index[v]) for u, v in self.edges if u in index and v in index]
        return Graph.from_edges(len(vertices), edges)

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.sorted_edges()]}

    @classmethod
    def from_json(cls, data: Mapping) -> Graph:
        try:
            n = int(data["n"])
            edges = data["edges"]
        except KeyError as exc:
            raise ValueError(f"graph JSON is missing field {exc.args[0]!r}") from None
        return cls.from_edges(n, edges)

    def _check(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise ValueError(f"vertex {v} out of range for n={self.n}")


# --- common graphs ------------------------------------------------------------

def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(leaves: int) -> Graph:
    """Centre 0 joined to vertices 1..leaves."""
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, itertools.combinations(range(n), 2))


def grid_graph(rows: int, cols: int) -> Graph:
    """Square lattice patch, vertex (r, c) at index r * cols + c."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph.from_edges(rows * cols, edges)


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < p]
    return Graph.from_edges(n, edges)


def local_complement(g: Graph, v: int) -> Graph:
    """Toggle every edge between two neighbours of ``v``."""
    nb = sorted(g.neighbors(v))
    return g.toggled(itertools.combinations(nb, 2))


# --- Pauli strings ---------------------------------------------------------------

_SIGNS = (1, -1, 1j, -1j)


@dataclass(frozen=True)
class PauliString:
    letters: tuple[str, ...]
    sign: complex = 1

    def __post_init__(self) -> None:
        letters = tuple(self.letters)
        bad = [ch for ch in letters if ch not in "IXYZ"]
        if bad:
            raise ValueError(f"unsupported Pauli letters {bad}")
        if self.sign not in _SIGNS:
            raise ValueError(f"sign must be one of {_SIGNS}")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def from_sites(cls, n: int, letters: Mapping[int, str], sign: complex = 1) -> PauliString:
        out = ["I"] * n
        for site, ch in letters.items():
            if not 0 <= site < n:
                raise ValueError(f"site {site} out of range for n={n}")
            out[site] = ch
        return cls(tuple(out), sign)

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def support(self) -> list[int]:
        return [i for i, ch in enumerate(self.letters) if ch != "I"]

    def commutes_with(self, other: PauliString) -> bool:
        if self.n != other.n:
            raise ValueError("Pauli strings act on different numbers of sites")
        clashes = sum(1 for a, b in zip(self.letters, other.letters) if a != "I" and b != "I" and a != b)
        return clashes % 2 == 0

    def operators(self) -> list[qstate.LocalOperator]:
        ops = [qstate.LocalOperator((i,), qstate.PAULIS[ch]) for i, ch in enumerate(self.letters) if ch != "I"]
        return ops

    def apply(self, state: PureState) -> np.ndarray:
        """Unnormalized amplitudes of ``sign * P |state>``."""
        out = state
        for op in self.operators():
            out = qstate.apply(out, op)
        return self.sign * out.amplitudes

    def __str__(self) -> str:
        prefix = {1: "+", -1: "-", 1j: "+i", -1j: "-i"}[self.sign]
        return prefix + "".join(self.letters)


def stabilizer(g: Graph, u: int) -> PauliString:
    """K_u = X_u prod_{v in Nb(u)} Z_v."""
    letters = {u: "X"}
    for v in g.neighbors(u):
        letters[v] = "Z"
    return PauliString.from_sites(g.n, letters)


def stabilizer_hamiltonian(g: Graph) -> list[qstate.LocalOperator]:
    """Terms of H = -sum_u K_u; for a ring this is the cluster Hamiltonian."""
    terms = []
    for u in range(g.n):
        k = stabilizer(g, u)
        sites = tuple(k.support)
        mat = qstate.kron(*(qstate.PAULIS[k.letters[s]] for s in sites))
        terms.append(qstate.LocalOperator(sites, -mat))
    return terms


def syndrome_vector(g: Graph, error: PauliString) -> np.ndarray:
    """Entry u is +1 if ``error`` commutes with K_u and -1 otherwise."""
    if error.n != g.n:
        raise ValueError(f"error acts on {error.n} sites, graph has {g.n}")
    return np.array([1 if error.commutes_with(stabilizer(g, u)) else -1 for u in range(g.n)])


def two_site_errors(g: Graph, a: int, b: int) -> list[PauliString]:
    """All 16 sigma (x) tau on sites a, b, identity first."""
    return [
        PauliString.from_sites(g.n, {a: s, b: t})
        for s, t in itertools.product("IXYZ", repeat=2)
    ]


# --- dense construction --------------------------------------------------------------

def build_dense(g: Graph, cap: int = qstate.DEFAULT_CAP) -> PureState:
    """prod_{(i,j) in E} CZ_ij |+>^n, built directly from the phase function."""
    if 2**g.n > cap:
        raise qstate.CapExceededError(f"graph state on {g.n} qubits exceeds cap {cap}")
    bits = _bit_table(g.n)
    parity = np.zeros(2**g.n, dtype=np.int64)
    for u, v in g.edges:
        parity ^= bits[:, u] & bits[:, v]
    amps = (1 - 2 * parity) / np.sqrt(2**g.n)
    return PureState(qstate.SiteSpec((2,) * g.n, cap), amps)


def build_dense_by_gates(g: Graph) -> PureState:
    """Same state as :func:`build_dense`, applying CZ gates one by one."""
    state = qstate.product_state([qstate.PLUS] * g.n)
    cz = qstate.standard_gate("CZ")
    for u, v in g.sorted_edges():
        state = qstate.apply(state, cz.on(u, v))
    return state


def _bit_table(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    # column q holds the bit of qubit q; qubit 0 is most significant
    return (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1


# --- descriptors and rewrite rules ------------------------------------------------------

@dataclass(frozen=True)
class GraphStateDesc:
    graph: Graph
    live: frozenset[int]
    corrections: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        live = frozenset(int(v) for v in self.live)
        for u, v in self.graph.edges:
            if u not in live or v not in live:
                raise ValueError(f"edge ({u}, {v}) touches a dead vertex")
        corr = {}
        for v, k in self.corrections.items():
            if int(v) not in live:
                raise ValueError(f"correction on dead vertex {v}")
            if int(k) % 4:
                corr[int(v)] = int(k) % 4
        object.__setattr__(self, "live", live)
        object.__setattr__(self, "corrections", corr)

    @classmethod
    def from_graph(cls, g: Graph) -> GraphStateDesc:
        return cls(g, frozenset(range(g.n)), {})

    @property
    def live_sorted(self) -> list[int]:
        return sorted(self.live)

    def correction(self, v: int) -> int:
        return self.corrections.get(v, 0)

    def live_graph(self) -> Graph:
        return self.graph.induced(self.live_sorted)

    def to_json(self) -> dict:
        return {
            "n": self.graph.n,
            "live": self.live_sorted,
            "edges": [list(e) for e in self.graph.sorted_edges()],
            "corrections": {str(v): k for v, k in sorted(self.corrections.items())},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> GraphStateDesc:
        g = Graph.from_edges(int(data["n"]), data["edges"])
        corr = {int(v): int(k) for v, k in data.get("corrections", {}).items()}
        return cls(g, frozenset(data.get("live", range(g.n))), corr)


def _require_live(d: GraphStateDesc, v: int) -> None:
    if v not in d.live:
        raise ValueError(f"vertex {v} is not live")


def _kill(d: GraphStateDesc, v: int, graph: Graph, extra: Mapping[int, int]) -> GraphStateDesc:
    corr = {u: k for u, k in d.corrections.items() if u != v}
    for u, k in extra.items():
        corr[u] = (corr.get(u, 0) + k) % 4
    return GraphStateDesc(graph.without_vertex_edges(v), d.live - {v}, corr)


def measure_z_rule(d: GraphStateDesc, v: int, outcome: int) -> GraphStateDesc:
    """Z measurement: drop ``v`` and its edges; outcome 1 leaves Z on the neighbours."""
    _require_live(d, v)
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    nb = d.graph.neighbors(v)
    return _kill(d, v, d.graph, {u: 2 * outcome for u in nb})


def measure_y_rule(d: GraphStateDesc, v: int, outcome: int) -> GraphStateDesc:
    """Y measurement: complement Nb(v), drop ``v``; S (outcome 0) or S^dag (outcome 1) on Nb(v).

    A Z correction already sitting on ``v`` flips the effective outcome. An
    odd S-power on ``v`` would turn this into an X measurement, which has no
    symbolic rule here.
    """
    _require_live(d, v)
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    kv = d.correction(v)
    if kv % 2:
        raise ValueError(f"vertex {v} carries S^{kv}; a Y measurement there is an X measurement")
    effective = outcome ^ (kv // 2)
    nb = d.graph.neighbors(v)
    g = local_complement(d.graph, v)
    return _kill(d, v, g, {u: 1 if effective == 0 else 3 for u in nb})


def apply_plan(d: GraphStateDesc, plan: Sequence[tuple[int, str, int]]) -> GraphStateDesc:
    """Apply a list of ``(vertex, basis, outcome)`` with basis ``"Z"`` or ``"Y"``."""
    for v, basis, outcome in plan:
        if basis == "Z":
            d = measure_z_rule(d, v, outcome)
        elif basis == "Y":
            d = measure_y_rule(d, v, outcome)
        else:
            raise ValueError(f"unsupported measurement basis {basis!r}; only Z and Y have rewrite rules")
    return d


def desc_to_dense(d: GraphStateDesc) -> PureState:
    """Dense state of the live vertices (ascending label order) with corrections applied."""
    live = d.live_sorted
    state = build_dense(d.graph.induced(live))
    amps = state.amplitudes.copy()
    if d.corrections:
        bits = _bit_table(len(live))
        phase = np.zeros(len(amps), dtype=np.int64)
        for v, k in d.corrections.items():
            phase += k * bits[:, live.index(v)]
        amps = amps * (1j ** (phase % 4))
    return PureState(state.spec, amps)


PAULI_BASES = {"Z": qstate.basis_z, "Y": qstate.basis_y, "X": qstate.basis_x}


def dense_measure(state: PureState, position: int, basis: str, outcome: int) -> PureState:
    """Measure qubit ``position`` of a dense state in a Pauli basis, forced outcome, discarded."""
    _, post = qstate.measure(state, position, PAULI_BASES[basis](), outcome, label=basis)
    return post


# --- square lattice -> brickwork ----------------------------------------------------------

@dataclass(frozen=True)
class BrickworkConversion:
    """Square-lattice patch, the Z/Y plan that carves a brickwork out of it, and the target.

    ``vertex_map[b]`` gives the square-lattice vertex holding brickwork vertex ``b``.
    """

    square: Graph
    square_shape: tuple[int, int]
    plan: tuple[tuple[int, str], ...]
    brickwork: Graph
    brickwork_shape: tuple[int, int]
    vertex_map: tuple[int, ...]


def brickwork_graph(rows: int, cols: int) -> Graph:
    """Brickwork lattice: horizontal wires plus vertical bricks.

    Rows ``i, i+1`` are joined at columns ``j`` and ``j+2`` whenever
    ``j % 8 == 2`` (i even) or ``j % 8 == 6`` (i odd) and ``j + 2 < cols``.
    """
    edges = []
    for i in range(rows):
        for j in range(cols - 1):
            edges.append((i * cols + j, i * cols + j + 1))
    for i, j in brickwork_links(rows, cols):
        edges.append((i * cols + j, (i + 1) * cols + j))
    return Graph.from_edges(rows * cols, edges)


def brickwork_links(rows: int, cols: int) -> list[tuple[int, int]]:
    """(row, column) of the upper end of every vertical brickwork edge."""
    links = []
    for i in range(rows - 1):
        start = 2 if i % 2 == 0 else 6
        for j in range(start, cols - 2, 8):
            links += [(i, j), (i, j + 2)]
    return links


def square_to_brickwork(rows: int, cols: int) -> BrickworkConversion:
    """Plan turning a (2*rows - 1) x cols square patch into a rows x cols brickwork.

    Wires sit on the even square rows. On the odd (spacer) rows, vertices
    under a brick link are measured in Y (joining the two wires through
    local complementation once their horizontal neighbours are gone), all
    others in Z. Z measurements come first so each Y vertex has degree 2.
    """
    if rows < 2 or cols < 5 or cols % 4 != 1:
        raise ValueError(
            f"brickwork of shape {rows}x{cols} does not close its bricks: need rows >= 2 and cols = 1 mod 4, cols >= 5"
        )
    sq_rows = 2 * rows - 1
    square = grid_graph(sq_rows, cols)
    links = set(brickwork_links(rows, cols))
    z_plan, y_plan = [], []
    for i in range(rows - 1):
        r = 2 * i + 1
        for j in range(cols):
            v = r * cols + j
            (y_plan if (i, j) in links else z_plan).append((v, "Y" if (i, j) in links else "Z"))
    vertex_map = tuple(2 * i * cols + j for i in range(rows) for j in range(cols))
    return BrickworkConversion(
        square,
        (sq_rows, cols),
        tuple(z_plan + y_plan),
        brickwork_graph(rows, cols),
        (rows, cols),
        vertex_map,
    )


def graph_json_dumps(g: Graph) -> str:
    return json.dumps(g.to_json(), sort_keys=True)
