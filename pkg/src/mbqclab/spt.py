"""Fixed-point SPT states: GHZ plaquettes with cocycle symmetries, CZX, and CCZ states.

Two families live here.

* Plaquette states on a cellulated surface. Every corner of a site (the
  angular sector between two consecutive edges) holds one parton of local
  dimension |G|; all partons around a face share one GHZ block. Surfaces are
  given by a rotation system (counterclockwise edge order at each site), and
  faces are traced from it.
* Qubit states on a triangulation: the Miller-Miyake state ``U_CCZ |+...+>``,
  the Levin-Gu state ``U_CCZ U_CZ |+...+>`` and their identities. Diagonal
  gates are handled as phase functions on computational basis states.
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from mbqclab import graphstate, qstate
from mbqclab.graphstate import Graph, GraphStateDesc
from mbqclab.qstate import LocalOperator, PureState

# --- cocycles --------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CocycleTable:
    """Homogeneous 3-cochain nu(g0, g1, g2, g3) on the cyclic group Z_order."""

    order: int
    nu: np.ndarray

    def __post_init__(self) -> None:
        nu = np.asarray(self.nu, dtype=complex)
        if nu.shape != (self.order,) * 4:
            raise ValueError(f"cocycle table must have shape {(self.order,) * 4}")
        if np.max(np.abs(np.abs(nu) - 1)) > 1e-12:
            raise ValueError("cocycle values must have unit modulus")
        object.__setattr__(self, "nu", nu)

    def __call__(self, g0: int, g1: int, g2: int, g3: int) -> complex:
        n = self.order
        return self.nu[g0 % n, g1 % n, g2 % n, g3 % n]

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "nu": [[float(v.real), float(v.imag)] for v in self.nu.reshape(-1)],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> CocycleTable:
        n = int(data["order"])
        vals = np.array([complex(re, im) for re, im in data["nu"]])
        return cls(n, vals.reshape((n,) * 4))


def cyclic_omega(order: int, level: int = 1) -> np.ndarray:
    """Inhomogeneous omega(a, b, c) = exp(2 pi i level a (b + c - [b + c]) / order^2).

    For order 2, level 1 this is (-1)^{abc}.
    """
    a, b, c = np.meshgrid(*(np.arange(order),) * 3, indexing="ij")
    carry = b + c - (b + c) % order
    return np.exp(2j * np.pi * level * a * carry / order**2)


def cyclic_cocycle(order: int = 2, level: int = 1) -> CocycleTable:
    """Homogeneous lift nu(g0, g1, g2, g3) = omega(g1 - g0, g2 - g1, g3 - g2)."""
    om = cyclic_omega(order, level)
    g = np.arange(order)
    g0, g1, g2, g3 = np.meshgrid(g, g, g, g, indexing="ij")
    return CocycleTable(order, om[(g1 - g0) % order, (g2 - g1) % order, (g3 - g2) % order])


def cocycle_defect(c: CocycleTable) -> float:
    """max |d nu - 1| over all G^5 tuples (homogeneous coboundary)."""
    g = np.arange(c.order)
    t = np.meshgrid(g, g, g, g, g, indexing="ij")
    nu = c.nu
    num = nu[t[1], t[2], t[3], t[4]] * nu[t[0], t[1], t[3], t[4]] * nu[t[0], t[1], t[2], t[3]]
    den = nu[t[0], t[2], t[3], t[4]] * nu[t[0], t[1], t[2], t[4]]
    return float(np.max(np.abs(num / den - 1)))


def invariance_defect(c: CocycleTable) -> float:
    """max |nu(g g0, ..., g g3) - nu(g0, ..., g3)| over g and all tuples."""
    n = c.order
    g = np.arange(n)
    t = np.meshgrid(g, g, g, g, indexing="ij")
    out = 0.0
    for h in range(n):
        shifted = c.nu[(t[0] + h) % n, (t[1] + h) % n, (t[2] + h) % n, (t[3] + h) % n]
        out = max(out, float(np.max(np.abs(shifted - c.nu))))
    return out


# --- plaquette lattices ---------------------------------------------------------------------


@dataclass(frozen=True)
class PlaquetteLattice:
    """Sites listing the plaquette of each of their partons in counterclockwise order.

    Partons are numbered site by site. ``colors`` is a proper 2-coloring of
    the sites when the lattice is bipartite.
    """

    site_plaquettes: tuple[tuple[int, ...], ...]
    colors: tuple[int, ...]
    geometry: str = "custom"

    def __post_init__(self) -> None:
        if len(self.colors) != len(self.site_plaquettes):
            raise ValueError("one color per site")

    @property
    def n_sites(self) -> int:
        return len(self.site_plaquettes)

    @property
    def n_partons(self) -> int:
        return sum(len(s) for s in self.site_plaquettes)

    @property
    def n_plaquettes(self) -> int:
        return 1 + max(p for s in self.site_plaquettes for p in s)

    def partons_of_site(self, site: int) -> tuple[int, ...]:
        start = sum(len(s) for s in self.site_plaquettes[:site])
        return tuple(range(start, start + len(self.site_plaquettes[site])))

    def plaquette_of_parton(self) -> list[int]:
        return [p for s in self.site_plaquettes for p in s]

    def partons_of_plaquette(self, p: int) -> list[int]:
        return [i for i, q in enumerate(self.plaquette_of_parton()) if q == p]

    def to_json(self) -> dict:
        return {
            "site_plaquettes": [list(s) for s in self.site_plaquettes],
            "colors": list(self.colors),
            "geometry": self.geometry,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> PlaquetteLattice:
        return cls(
            tuple(tuple(s) for s in data["site_plaquettes"]),
            tuple(data["colors"]),
            data.get("geometry", "custom"),
        )


def trace_faces(
    darts: Sequence[Sequence[tuple[int, str]]],
    reverse: Mapping[tuple[int, str], tuple[int, str]],
) -> list[list[int]]:
    """Face label of every corner from a rotation system.

    ``darts[v]`` lists the darts ``(v, label)`` leaving ``v`` counterclockwise;
    ``reverse`` maps each dart to its partner at the other end. Corner ``i`` of
    ``v`` is the sector from dart ``i`` to dart ``i + 1``. Returns the face of
    each corner, per site.
    """
    position = {d: (v, i) for v, ds in enumerate(darts) for i, d in enumerate(ds)}
    face = [[-1] * len(ds) for ds in darts]
    n_faces = 0
    for v, ds in enumerate(darts):
        for i in range(len(ds)):
            if face[v][i] >= 0:
                continue
            cv, ci = v, i
            while face[cv][ci] < 0:
                face[cv][ci] = n_faces
                # the sector left of dart ci+1 continues at the far end, right after the reverse dart
                nxt = darts[cv][(ci + 1) % len(darts[cv])]
                cv, ci = position[reverse[nxt]]
            n_faces += 1
    return face


def square_torus(rows: int = 2, cols: int = 2) -> PlaquetteLattice:
    """Square lattice on a torus; four partons per site (the CZX geometry)."""
    if rows % 2 or cols % 2:
        raise ValueError("use even sizes so the torus stays bipartite")
    idx = lambda r, c: (r % rows) * cols + (c % cols)  # noqa: E731
    darts, reverse = [], {}
    step = {"E": (0, 1), "N": (1, 0), "W": (0, -1), "S": (-1, 0)}
    back = {"E": "W", "W": "E", "N": "S", "S": "N"}
    for r in range(rows):
        for c in range(cols):
            v = idx(r, c)
            darts.append([(v, d) for d in "ENWS"])
            for d, (dr, dc) in step.items():
                reverse[(v, d)] = (idx(r + dr, c + dc), back[d])
    faces = trace_faces(darts, reverse)
    colors = tuple((r + c) % 2 for r in range(rows) for c in range(cols))
    return PlaquetteLattice(tuple(tuple(f) for f in faces), colors, "square-torus")


def honeycomb_torus(rows: int = 2, cols: int = 2) -> PlaquetteLattice:
    """Brick-wall honeycomb on a torus; three partons per site.

    Site (r, c) bonds left and right, and up when r + c is even (down otherwise).
    """
    if rows % 2 or cols % 2:
        raise ValueError("use even sizes so the brick wall closes consistently")
    idx = lambda r, c: (r % rows) * cols + (c % cols)  # noqa: E731
    darts, reverse = [], {}
    for r in range(rows):
        for c in range(cols):
            v = idx(r, c)
            if (r + c) % 2 == 0:
                darts.append([(v, "E"), (v, "N"), (v, "W")])
                reverse[(v, "N")] = (idx(r + 1, c), "S")
            else:
                darts.append([(v, "E"), (v, "W"), (v, "S")])
                reverse[(v, "S")] = (idx(r - 1, c), "N")
            reverse[(v, "E")] = (idx(r, c + 1), "W")
            reverse[(v, "W")] = (idx(r, c - 1), "E")
    faces = trace_faces(darts, reverse)
    colors = tuple((r + c) % 2 for r in range(rows) for c in range(cols))
    return PlaquetteLattice(tuple(tuple(f) for f in faces), colors, "honeycomb-torus")


def single_plaquette(k: int = 4) -> PlaquetteLattice:
    """One GHZ block of ``k`` partons, each on its own site."""
    return PlaquetteLattice(tuple((0,) for _ in range(k)), tuple(i % 2 for i in range(k)), "single")


def build_ghz_plaquette_state(lat: PlaquetteLattice, order: int = 2, cap: int = qstate.DEFAULT_CAP) -> PureState:
    """Product over plaquettes of (1/sqrt|G|) sum_g |g, ..., g>."""
    n = lat.n_partons
    if order**n > cap:
        raise qstate.CapExceededError(f"{n} partons of dimension {order} exceed cap {cap}")
    owner = np.array(lat.plaquette_of_parton())
    n_p = lat.n_plaquettes
    amps = np.zeros(order**n, dtype=complex)
    weights = order ** np.arange(n - 1, -1, -1)
    for values in itertools.product(range(order), repeat=n_p):
        config = np.array(values)[owner]
        amps[int(config @ weights)] = 1.0
    amps /= np.sqrt(order**n_p)
    return PureState(qstate.SiteSpec((order,) * n, cap), amps)


# --- on-site cocycle symmetry ---------------------------------------------------------------

def default_branching(lat: PlaquetteLattice, site: int) -> frozenset[int]:
    """Counterclockwise set {i_a}: every corner on color-0 sites, none on color-1 sites.

    With this choice each edge contributes nu(P, Q, ...) at one end and its
    inverse at the other, so the global product fixes the plaquette state.
    """
    k = len(lat.site_plaquettes[site])
    return frozenset(range(k)) if lat.colors[site] == 0 else frozenset()


def alternating_branching(k: int) -> frozenset[int]:
    return frozenset(range(0, k, 2))


def site_phase(
    alphas: Sequence[int], g: int, cocycle: CocycleTable, gbar: int = 0, branching: frozenset[int] = frozenset()
) -> complex:
    """f_3(alpha_1..alpha_k, g, gbar) for a cyclic group written additively."""
    k = len(alphas)
    h = (gbar - g) % cocycle.order  # g^{-1} gbar
    out = 1.0 + 0j
    for i in range(k):
        a, b = alphas[i], alphas[(i + 1) % k]
        if i in branching:
            out *= cocycle(a, b, h, gbar)
        else:
            out /= cocycle(b, a, h, gbar)
    return out


def symmetry_action(
    lat: PlaquetteLattice,
    site: int,
    g: int,
    cocycle: CocycleTable,
    gbar: int = 0,
    branching: frozenset[int] | None = None,
) -> LocalOperator:
    """U(g) on one site: |alpha> -> f_3(alpha, g, gbar) |g alpha> on every parton."""
    k = len(lat.site_plaquettes[site])
    if branching is None:
        branching = default_branching(lat, site)
    if not set(branching) <= set(range(k)):
        raise ValueError(f"branching indices must lie in 0..{k - 1}")
    n = cocycle.order
    dim = n**k
    mat = np.zeros((dim, dim), dtype=complex)
    for j, alphas in enumerate(itertools.product(range(n), repeat=k)):
        target = [(a + g) % n for a in alphas]
        i = int(np.ravel_multi_index(target, (n,) * k))
        mat[i, j] = site_phase(alphas, g, cocycle, gbar, branching)
    return LocalOperator(lat.partons_of_site(site), mat)


def linear_defect(k: int, cocycle: CocycleTable, branching: frozenset[int], gbar: int = 0) -> float:
    """max over g, g', alpha of |phase of U(g' g^-1) U(g) - phase of U(g')|."""
    n = cocycle.order
    worst = 0.0
    for alphas in itertools.product(range(n), repeat=k):
        for g in range(n):
            shifted = [(a + g) % n for a in alphas]
            first = site_phase(alphas, g, cocycle, gbar, branching)
            for g2 in range(n):
                lhs = site_phase(shifted, (g2 - g) % n, cocycle, gbar, branching) * first
                rhs = site_phase(alphas, g2, cocycle, gbar, branching)
                worst = max(worst, abs(lhs - rhs))
    return worst


def global_symmetry_fidelity(
    lat: PlaquetteLattice,
    g: int,
    cocycle: CocycleTable,
    gbar: int = 0,
    branching: str = "coloring",
) -> float:
    """|<psi| U(g) |psi>| with U(g) the product of on-site actions."""
    state = build_ghz_plaquette_state(lat, cocycle.order)
    out = state
    for s in range(lat.n_sites):
        k = len(lat.site_plaquettes[s])
        br = default_branching(lat, s) if branching == "coloring" else alternating_branching(k)
        out = qstate.apply(out, symmetry_action(lat, s, g, cocycle, gbar, br))
    return float(abs(np.vdot(state.amplitudes, out.amplitudes)))


# --- CZX --------------------------------------------------------------------------------------

def czx_site_action(k: int = 4) -> np.ndarray:
    """U_CZX = U_CZ U_X on a ring of ``k`` partons: CZ_{12} CZ_{23} ... CZ_{k1} after X on all."""
    if k < 3:
        raise ValueError("a CZX ring needs at least three partons")
    bits = graphstate._bit_table(k)
    parity = np.zeros(2**k, dtype=np.int64)
    for i in range(k):
        parity ^= bits[:, i] & bits[:, (i + 1) % k]
    ucz = np.diag(1 - 2 * parity).astype(complex)
    ux = qstate.kron(*([qstate.PAULI_X] * k))
    return ucz @ ux


def czx_invariance_fidelity(lat: PlaquetteLattice) -> float:
    state = build_ghz_plaquette_state(lat, 2)
    out = state
    for s in range(lat.n_sites):
        k = len(lat.site_plaquettes[s])
        out = qstate.apply(out, LocalOperator(lat.partons_of_site(s), czx_site_action(k)))
    return float(abs(np.vdot(state.amplitudes, out.amplitudes)))


# --- entanglement concentration ----------------------------------------------------------------

def ghz_state(n: int, sign: int = 1) -> PureState:
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1
    amps[-1] = sign
    return PureState(qstate.SiteSpec((2,) * n), amps / np.sqrt(2))


def ghz_concentrate(state: PureState, qubit: int, policy: int | np.random.Generator = 0) -> tuple[int, PureState]:
    """X-measure one qubit; GHZ_n becomes GHZ_{n-1} with sign (-1)^outcome."""
    rec, post = qstate.measure(state, qubit, qstate.basis_x(), policy, label="X")
    return rec.outcome, post


BELL_BASIS = [
    np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
    np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
]


@dataclass(frozen=True)
class MergeRecord:
    outcome: int
    sign: int
    flip_second_block: bool


def ghz_merge(
    state: PureState,
    qubit_a: int,
    qubit_b: int,
    policy: int | np.random.Generator = 0,
) -> tuple[MergeRecord, PureState]:
    """Bell-measure two qubits of one site, each from a different GHZ block.

    Phi outcomes leave one GHZ block with sign +-1; Psi outcomes additionally
    need X on every qubit of the second block.
    """
    rec, post = qstate.measure(state, (qubit_a, qubit_b), BELL_BASIS, policy, label="bell")
    k = rec.outcome
    return MergeRecord(k, 1 if k in (0, 2) else -1, k >= 2), post


def ghz_fidelity(state: PureState, sign: int = 1) -> float:
    return qstate.fidelity_up_to_phase(state, ghz_state(state.n_sites, sign))


# --- triangulations -------------------------------------------------------------------------------


@dataclass(frozen=True)
class TriangulatedLattice:
    n: int
    triangles: tuple[tuple[int, int, int], ...]
    closed: bool
    cross_sites: tuple[int, ...] = ()
    name: str = "custom"
    extra_edges: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self) -> None:
        for t in self.triangles:
            if len(set(t)) != 3 or not all(0 <= v < self.n for v in t):
                raise ValueError(f"bad triangle {t}")
        if self.closed:
            counts: dict[tuple[int, int], int] = {}
            for t in self.triangles:
                for u, v in itertools.combinations(sorted(t), 2):
                    counts[(u, v)] = counts.get((u, v), 0) + 1
            if any(c != 2 for c in counts.values()):
                raise ValueError("on a closed surface every edge borders exactly two triangles")

    @property
    def edges(self) -> list[tuple[int, int]]:
        es = {tuple(sorted(e)) for t in self.triangles for e in itertools.combinations(t, 2)}
        es |= {tuple(sorted(e)) for e in self.extra_edges}
        return sorted(es)

    @property
    def graph(self) -> Graph:
        return Graph.from_edges(self.n, self.edges)

    def triangles_at(self, p: int) -> list[tuple[int, int]]:
        """Opposite edges (q, r) of the triangles containing ``p``."""
        return [tuple(v for v in t if v != p) for t in self.triangles if p in t]

    @property
    def square_sites(self) -> tuple[int, ...]:
        cross = set(self.cross_sites)
        return tuple(v for v in range(self.n) if v not in cross)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "triangles": [list(t) for t in self.triangles],
            "closed": self.closed,
            "cross_sites": list(self.cross_sites),
            "name": self.name,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> TriangulatedLattice:
        return cls(
            int(data["n"]),
            tuple(tuple(t) for t in data["triangles"]),
            bool(data.get("closed", False)),
            tuple(data.get("cross_sites", ())),
            data.get("name", "custom"),
        )


def triangular_torus(size: int = 3) -> TriangulatedLattice:
    """Triangular lattice on a size x size torus (edges right, up, up-right)."""
    idx = lambda r, c: (r % size) * size + (c % size)  # noqa: E731
    tris = []
    for r in range(size):
        for c in range(size):
            tris.append((idx(r, c), idx(r, c + 1), idx(r + 1, c + 1)))
            tris.append((idx(r, c), idx(r + 1, c + 1), idx(r + 1, c)))
    return TriangulatedLattice(size * size, tuple(tris), True, (), f"triangular-torus-{size}")


def union_jack_patch(size: int = 3) -> TriangulatedLattice:
    """Open Union-Jack patch: size x size square sites plus a cross site in every cell."""
    sq = lambda r, c: r * size + c  # noqa: E731
    n_sq = size * size
    tris, cross = [], []
    for r in range(size - 1):
        for c in range(size - 1):
            x = n_sq + r * (size - 1) + c
            cross.append(x)
            a, b, d, e = sq(r, c), sq(r, c + 1), sq(r + 1, c + 1), sq(r + 1, c)
            tris += [(x, a, b), (x, b, d), (x, d, e), (x, e, a)]
    return TriangulatedLattice(n_sq + len(cross), tuple(tris), False, tuple(cross), f"union-jack-patch-{size}")


def union_jack_torus(size: int = 3) -> TriangulatedLattice:
    """Union-Jack lattice on a size x size torus (size^2 square + size^2 cross sites)."""
    sq = lambda r, c: (r % size) * size + (c % size)  # noqa: E731
    n_sq = size * size
    tris, cross = [], []
    for r in range(size):
        for c in range(size):
            x = n_sq + r * size + c
            cross.append(x)
            a, b, d, e = sq(r, c), sq(r, c + 1), sq(r + 1, c + 1), sq(r + 1, c)
            tris += [(x, a, b), (x, b, d), (x, d, e), (x, e, a)]
    return TriangulatedLattice(2 * n_sq, tuple(tris), True, tuple(cross), f"union-jack-torus-{size}")


def single_triangle() -> TriangulatedLattice:
    return TriangulatedLattice(3, ((0, 1, 2),), False, (), "triangle")


# --- phase functions on basis states ------------------------------------------------------------
# ``bits`` is an integer array of shape (samples, n); every function returns one phase per row.

def ccz_phase(t: TriangulatedLattice, bits: np.ndarray) -> np.ndarray:
    par = np.zeros(len(bits), dtype=np.int64)
    for p, q, r in t.triangles:
        par ^= bits[:, p] & bits[:, q] & bits[:, r]
    return (1 - 2 * par).astype(complex)


def cz_phase(edges: Sequence[tuple[int, int]], bits: np.ndarray) -> np.ndarray:
    par = np.zeros(len(bits), dtype=np.int64)
    for u, v in edges:
        par ^= bits[:, u] & bits[:, v]
    return (1 - 2 * par).astype(complex)


def s_phase(t: TriangulatedLattice, p: int, bits: np.ndarray) -> np.ndarray:
    """S_p = prod over triangles <p q r> of i^{(1 - z_q z_r)/2} = i^{[x_q != x_r]}."""
    k = np.zeros(len(bits), dtype=np.int64)
    for q, r in t.triangles_at(p):
        k += bits[:, q] ^ bits[:, r]
    return 1j ** (k % 4)


def us_phase(t: TriangulatedLattice, bits: np.ndarray) -> np.ndarray:
    """U_S = prod_p prod_{<p q r>} (|0><0|_p + |1><1|_p S_{p;qr})."""
    k = np.zeros(len(bits), dtype=np.int64)
    for p in range(t.n):
        for q, r in t.triangles_at(p):
            k += bits[:, p] * (bits[:, q] ^ bits[:, r])
    return 1j ** (k % 4)


def z_neighbors_phase(g: Graph, p: int, bits: np.ndarray) -> np.ndarray:
    par = np.zeros(len(bits), dtype=np.int64)
    for q in g.neighbors(p):
        par ^= bits[:, q]
    return (1 - 2 * par).astype(complex)


def _full_bits(n: int) -> np.ndarray:
    return graphstate._bit_table(n)


def sample_bits(n: int, samples: int, rng: np.random.Generator, exhaustive_limit: int = 14) -> np.ndarray:
    """All basis states up to 2^exhaustive_limit, otherwise ``samples`` random ones."""
    if n <= exhaustive_limit:
        return _full_bits(n)
    return rng.integers(0, 2, size=(samples, n))


def flip(bits: np.ndarray, p: int) -> np.ndarray:
    out = bits.copy()
    out[:, p] ^= 1
    return out


# --- states ---------------------------------------------------------------------------------------

def _diag_state(n: int, phase: np.ndarray, cap: int) -> PureState:
    if 2**n > cap:
        raise qstate.CapExceededError(f"{n} qubits exceed cap {cap}")
    return PureState(qstate.SiteSpec((2,) * n, cap), phase / np.sqrt(2**n))


def build_cluster_state(t: TriangulatedLattice, cap: int = qstate.DEFAULT_CAP) -> PureState:
    return _diag_state(t.n, cz_phase(t.edges, _full_bits(t.n)), cap)


def build_mm_state(t: TriangulatedLattice, cap: int = qstate.DEFAULT_CAP) -> PureState:
    """U_CCZ |+...+>."""
    return _diag_state(t.n, ccz_phase(t, _full_bits(t.n)), cap)


def build_lg_state(t: TriangulatedLattice, cap: int = qstate.DEFAULT_CAP) -> PureState:
    """U_CCZ U_CZ |+...+>."""
    bits = _full_bits(t.n)
    return _diag_state(t.n, ccz_phase(t, bits) * cz_phase(t.edges, bits), cap)


def _apply_x_then_diag(state: PureState, p: int, diag: np.ndarray) -> np.ndarray:
    """diag * X_p |psi> as an amplitude vector (diag indexed by output basis state)."""
    n = state.n_sites
    idx = np.arange(2**n) ^ (1 << (n - 1 - p))
    return diag * state.amplitudes[idx]


def mm_stabilizer_defect(t: TriangulatedLattice, state: PureState, p: int) -> float:
    """max |Q_p psi - psi| with Q_p = X_p prod_{<p q r>} CZ_qr."""
    bits = _full_bits(t.n)
    diag = cz_phase(t.triangles_at(p), bits)
    # Q_p = X_p D: (X_p D psi)(x) = D(x ^ e_p) psi(x ^ e_p); D does not involve p
    return float(np.max(np.abs(_apply_x_then_diag(state, p, diag) - state.amplitudes)))


def mm_check(t: TriangulatedLattice) -> float:
    state = build_mm_state(t)
    return max(mm_stabilizer_defect(t, state, p) for p in range(t.n))


def lg_plaquette_defect(t: TriangulatedLattice, state: PureState, p: int) -> float:
    """max |B_p psi - psi| with B_p = X_p S_p."""
    bits = _full_bits(t.n)
    return float(np.max(np.abs(_apply_x_then_diag(state, p, s_phase(t, p, bits)) - state.amplitudes)))


def lg_check(t: TriangulatedLattice) -> float:
    state = build_lg_state(t)
    return max(lg_plaquette_defect(t, state, p) for p in range(t.n))


def lg_hamiltonian(t: TriangulatedLattice, cap: int = 4096) -> np.ndarray:
    """Dense H_LG = -sum_p X_p S_p."""
    dim = 2**t.n
    if dim > cap:
        raise qstate.CapExceededError(f"Hamiltonian dimension {dim} exceeds cap {cap}")
    bits = _full_bits(t.n)
    h = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for p in range(t.n):
        rows = cols ^ (1 << (t.n - 1 - p))
        # B_p |x> = S_p(x) |x ^ e_p>
        h[rows, cols] -= s_phase(t, p, bits)
    return h


# --- identities -------------------------------------------------------------------------------------

def verify_ccz_identities(
    t: TriangulatedLattice,
    rng: np.random.Generator | None = None,
    samples: int = 256,
) -> dict[str, float]:
    """Largest deviation of each identity, evaluated on computational basis states.

    Every operator involved is a phase times a bit flip, so agreement on a
    basis state is agreement of the matrix column.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    bits = sample_bits(t.n, samples, rng)
    g = t.graph
    report: dict[str, float] = {}
    if t.closed:
        report["us_equals_uccz"] = float(np.max(np.abs(us_phase(t, bits) - ccz_phase(t, bits))))
    ccz, cz = ccz_phase(t, bits), cz_phase(t.edges, bits)
    worst_ccz, worst_lg = 0.0, 0.0
    for p in range(t.n):
        fb = flip(bits, p)
        # U X_p U^dag |x> = U(x ^ e_p) U^dag(x) |x ^ e_p>, phases indexed by x
        lhs = ccz_phase(t, fb) * ccz
        if t.closed:
            rhs = z_neighbors_phase(g, p, bits) * s_phase(t, p, bits)
            worst_ccz = max(worst_ccz, float(np.max(np.abs(lhs - rhs))))
            lhs2 = ccz_phase(t, fb) * cz_phase(t.edges, fb) * ccz * cz
            worst_lg = max(worst_lg, float(np.max(np.abs(lhs2 - s_phase(t, p, bits)))))
        else:
            # open surfaces keep the exact per-vertex form X_p prod CZ_qr
            rhs = cz_phase(t.triangles_at(p), bits)
            worst_ccz = max(worst_ccz, float(np.max(np.abs(lhs - rhs))))
    report["uccz_conjugation"] = worst_ccz
    if t.closed:
        report["ucz_uccz_conjugation"] = worst_lg
    if t.n <= 20:
        lg_a = build_lg_state(t)
        mm = build_mm_state(t)
        lg_b = PureState(mm.spec, cz_phase(t.edges, _full_bits(t.n)) * mm.amplitudes)
        report["three_states"] = 1 - qstate.fidelity_up_to_phase(lg_a, lg_b)
    return report


# --- cross-site measurements on the Union-Jack lattice ------------------------------------------

def square_edge_flanks(t: TriangulatedLattice) -> dict[tuple[int, int], list[int]]:
    """Square-sublattice edges and the cross sites of the triangles they border."""
    cross = set(t.cross_sites)
    out: dict[tuple[int, int], list[int]] = {}
    for tri in t.triangles:
        xs = [v for v in tri if v in cross]
        if len(xs) != 1:
            raise ValueError("every triangle needs exactly one cross site")
        q, r = sorted(v for v in tri if v not in cross)
        out.setdefault((q, r), []).append(xs[0])
    return out


def cross_site_z_measure(
    t: TriangulatedLattice,
    outcomes: Mapping[int, int],
    model: str = "mm",
) -> tuple[GraphStateDesc, dict[tuple[int, int], int]]:
    """Graph state left on the square sites after Z-measuring every cross site.

    A square edge carries a bond iff the XOR of its flanking cross outcomes is
    1 (MM); the LG state adds every square edge once more and, through the
    cross-to-corner CZs, a Z on each corner of a cross site with outcome 1.
    Square sites are relabelled 0..k-1 in their original order.
    """
    cross = set(t.cross_sites)
    if set(outcomes) != cross:
        bad = set(outcomes) - cross
        if bad:
            raise ValueError(f"sites {sorted(bad)} are not cross sites")
        raise ValueError("give an outcome for every cross site")
    flanks = square_edge_flanks(t)
    square = t.square_sites
    index = {v: i for i, v in enumerate(square)}
    bonds = {e: sum(outcomes[x] for x in xs) % 2 for e, xs in flanks.items()}
    if model == "lg":
        bonds = {e: b ^ 1 for e, b in bonds.items()}
    edges = [(index[q], index[r]) for (q, r), b in bonds.items() if b]
    corr: dict[int, int] = {}
    if model == "lg":
        for x, m in outcomes.items():
            if m:
                for q in t.graph.neighbors(x):
                    if q not in cross:
                        corr[index[q]] = (corr.get(index[q], 0) + 2) % 4
    elif model != "mm":
        raise ValueError(f"unknown model {model!r}")
    g = Graph.from_edges(len(square), edges)
    return GraphStateDesc(g, frozenset(range(len(square))), corr), bonds


def dense_cross_measure(state: PureState, t: TriangulatedLattice, outcomes: Mapping[int, int]) -> PureState:
    """Z-measure the cross sites of a dense state with forced outcomes."""
    positions = list(range(t.n))
    for x in sorted(outcomes, reverse=True):
        _, state = qstate.measure(state, positions.index(x), qstate.basis_z(), outcomes[x], label="Z")
        positions.remove(x)
    return state


def cross_measure_fidelity(t: TriangulatedLattice, outcomes: Mapping[int, int], model: str = "mm") -> float:
    state = build_mm_state(t) if model == "mm" else build_lg_state(t)
    post = dense_cross_measure(state, t, outcomes)
    desc, _ = cross_site_z_measure(t, outcomes, model)
    return qstate.fidelity_up_to_phase(post, graphstate.desc_to_dense(desc))


def complement_relation_holds(t: TriangulatedLattice, outcomes: Mapping[int, int]) -> bool:
    """LG bond pattern is the complement of the MM one on every square edge."""
    _, mm = cross_site_z_measure(t, outcomes, "mm")
    _, lg = cross_site_z_measure(t, outcomes, "lg")
    return set(mm) == set(lg) and all(mm[e] ^ lg[e] == 1 for e in mm)
