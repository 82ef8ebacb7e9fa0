"""AKLT valence-bond states, parent Hamiltonians, POVMs and the encoded graph state.

A site of spin S holds 2S virtual qubits projected onto their symmetric
subspace; each bond of the layout carries a singlet on two virtual qubits.
Virtual qubits left over on boundary sites ("dangling") are fixed to |0>.

Virtual |0> is spin up, so the spin-S level with ``k`` down spins is the
Dicke state of weight ``k``. Physical levels are ordered S_z = S, S-1, ..., -S.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from mbqclab import graphstate, qstate
from mbqclab.graphstate import Graph
from mbqclab.qstate import LocalOperator, PureState

AXES = ("x", "y", "z")

SINGLET = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
BOND_STATES = {
    "singlet": SINGLET,
    "phi+": np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
    "psi+": np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
}


@dataclass(frozen=True)
class ValenceBondLayout:
    """Sites with spins and bonds (repeated bonds allowed) between them."""

    spins: tuple[Fraction, ...]
    bonds: tuple[tuple[int, int], ...]
    bond_state: str = "singlet"

    def __post_init__(self) -> None:
        spins = tuple(Fraction(s) for s in self.spins)
        object.__setattr__(self, "spins", spins)
        bonds = tuple((int(u), int(v)) for u, v in self.bonds)
        object.__setattr__(self, "bonds", bonds)
        if self.bond_state not in BOND_STATES:
            raise ValueError(f"unknown bond state {self.bond_state!r}")
        for u, v in bonds:
            if u == v or not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"bad bond ({u}, {v})")
        for v in range(self.n):
            if spins[v] <= 0 or (2 * spins[v]).denominator != 1:
                raise ValueError(f"site {v}: spin must be a positive multiple of 1/2")
            if self.degree(v) > 2 * spins[v]:
                raise ValueError(f"site {v}: spin {spins[v]} cannot host {self.degree(v)} bonds")

    @property
    def n(self) -> int:
        return len(self.spins)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(int(2 * s + 1) for s in self.spins)

    def degree(self, v: int) -> int:
        return sum((u == v) + (w == v) for u, w in self.bonds)

    def dangling(self, v: int) -> int:
        return int(2 * self.spins[v]) - self.degree(v)

    @property
    def graph(self) -> Graph:
        return Graph.from_edges(self.n, self.bonds)

    def to_json(self) -> dict:
        return {
            "spins": [str(s) for s in self.spins],
            "bonds": [list(b) for b in self.bonds],
            "bond_state": self.bond_state,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> ValenceBondLayout:
        if "spins" in data:
            spins = [Fraction(str(s)) for s in data["spins"]]
        else:
            # bare graph JSON: spin is half the degree
            g = Graph.from_json(data)
            spins = [Fraction(g.degree(v), 2) for v in range(g.n)]
        return cls(tuple(spins), tuple(tuple(b) for b in data.get("bonds", data.get("edges", []))), data.get("bond_state", "singlet"))


def chain_layout(n: int, periodic: bool = False) -> ValenceBondLayout:
    """Spin-1 chain; open ends keep one dangling virtual qubit each."""
    bonds = [(i, i + 1) for i in range(n - 1)]
    if periodic:
        bonds.append((n - 1, 0))
    return ValenceBondLayout(tuple([Fraction(1)] * n), tuple(bonds))


def trivalent_layout(g: Graph) -> ValenceBondLayout:
    """Spin-3/2 on every vertex of a graph with maximum degree 3."""
    return ValenceBondLayout(tuple([Fraction(3, 2)] * g.n), tuple(g.sorted_edges()))


def hexagon_patch() -> ValenceBondLayout:
    """One honeycomb plaquette: six spin-3/2 sites, one dangling qubit each."""
    return trivalent_layout(graphstate.cycle_graph(6))


def two_site_fragment(spin: Fraction | float = Fraction(3, 2)) -> ValenceBondLayout:
    return ValenceBondLayout((Fraction(spin), Fraction(spin)), ((0, 1),))


def complete_bipartite_33() -> ValenceBondLayout:
    """K_{3,3}: a closed trivalent graph with no dangling qubits."""
    return trivalent_layout(Graph.from_edges(6, [(a, b) for a in range(3) for b in range(3, 6)]))


# --- dense construction -----------------------------------------------------------------------

def symmetric_projector(spin: Fraction | float) -> np.ndarray:
    """Rows |S, m> (m descending), columns the 2S virtual qubits; Dicke states."""
    k2 = int(2 * Fraction(spin))
    out = np.zeros((k2 + 1, 2**k2), dtype=complex)
    for b in range(2**k2):
        w = bin(b).count("1")
        out[w, b] = 1.0 / math.sqrt(math.comb(k2, w))
    return out


def build_aklt_dense(layout: ValenceBondLayout, cap: int = qstate.DEFAULT_CAP) -> PureState:
    """Contract site projectors with bond states; dangling virtual qubits are |0>."""
    dims = layout.dims
    if int(np.prod(dims)) > cap:
        raise qstate.CapExceededError(f"AKLT layout with dims {dims} exceeds cap {cap}")
    bond = BOND_STATES[layout.bond_state].reshape(2, 2)
    label = itertools.count()
    phys = [next(label) for _ in range(layout.n)]
    slots: list[list[int]] = [[] for _ in range(layout.n)]
    operands: list = []
    for u, v in layout.bonds:
        a, b = next(label), next(label)
        slots[u].append(a)
        slots[v].append(b)
        operands += [bond, [a, b]]
    ket0 = np.array([1, 0], dtype=complex)
    for v in range(layout.n):
        for _ in range(layout.dangling(v)):
            a = next(label)
            slots[v].append(a)
            operands += [ket0, [a]]
        k2 = int(2 * layout.spins[v])
        proj = symmetric_projector(layout.spins[v]).reshape((k2 + 1,) + (2,) * k2)
        operands += [proj, [phys[v]] + slots[v]]
    raw = np.einsum(*operands, phys, optimize="greedy").reshape(-1)
    norm = np.linalg.norm(raw)
    if norm < qstate.ZERO_PROB:
        raise qstate.ZeroProbabilityError("valence-bond contraction vanishes")
    return PureState(qstate.SiteSpec(dims, cap), raw / norm)


# --- Hamiltonians ----------------------------------------------------------------------------

def heisenberg_coupling(s1: Fraction | float, s2: Fraction | float) -> np.ndarray:
    """S_i . S_j on the two-site space."""
    a = qstate.spin_matrices(float(s1))
    b = qstate.spin_matrices(float(s2))
    return sum(np.kron(x, y) for x, y in zip(a, b)).real.astype(complex)


def total_spin_projector(s1: Fraction | float, s2: Fraction | float, total: Fraction | float) -> np.ndarray:
    """Projector onto total spin ``total`` of two spins, from the S^2 spectrum."""
    x = heisenberg_coupling(s1, s2)
    s1, s2 = float(s1), float(s2)
    s_sq = x * 2 + (s1 * (s1 + 1) + s2 * (s2 + 1)) * np.eye(x.shape[0])
    w, v = np.linalg.eigh(s_sq)
    t = float(total)
    sel = np.abs(w - t * (t + 1)) < 1e-8
    return v[:, sel] @ v[:, sel].conj().T


# constant restoring the spin-3/2 edge term to (160/27) P^{S=3}
SPIN32_OFFSET = Fraction(55, 108)


def edge_term(spin: Fraction | float) -> np.ndarray:
    """AKLT edge term for two equal spins 1 or 3/2.

    Spin 1: (x + x^2/3 + 2/3)/2 with x = S_i.S_j (equal to P^{S=2}).
    Spin 3/2: x + 116/243 x^2 + 16/243 x^3 + 55/108 (equal to 160/27 P^{S=3}).
    """
    spin = Fraction(spin)
    x = heisenberg_coupling(spin, spin)
    eye = np.eye(x.shape[0])
    if spin == 1:
        return 0.5 * (x + x @ x / 3 + 2 / 3 * eye)
    if spin == Fraction(3, 2):
        return x + 116 / 243 * x @ x + 16 / 243 * x @ x @ x + float(SPIN32_OFFSET) * eye
    raise ValueError(f"no AKLT edge term for spin {spin}")


def projector_polynomial(spin: Fraction | float) -> tuple[float, np.ndarray]:
    """Constant c and c * prod_{S' < 2S} (S_tot^2 - S'(S'+1)), which equals P^{S=2S}."""
    spin = Fraction(spin)
    x = heisenberg_coupling(spin, spin)
    eye = np.eye(x.shape[0])
    ss = float(spin * (spin + 1))
    s_sq = 2 * x + 2 * ss * eye
    poly = eye.astype(complex)
    top = int(2 * spin)
    for s in range(top):
        poly = poly @ (s_sq - s * (s + 1) * eye)
    denom = np.prod([top * (top + 1) - s * (s + 1) for s in range(top)])
    return 1.0 / denom, poly / denom


def aklt_hamiltonian(layout: ValenceBondLayout) -> list[LocalOperator]:
    """One edge term per bond; both endpoints must carry the same spin 1 or 3/2."""
    terms = []
    for u, v in layout.bonds:
        if layout.spins[u] != layout.spins[v]:
            raise ValueError(f"bond ({u}, {v}) joins different spins")
        terms.append(LocalOperator((u, v), edge_term(layout.spins[u]), check_unitary=False, check_hermitian=True))
    return terms


def hamiltonian_residual(state: PureState, terms: Sequence[LocalOperator]) -> float:
    """Largest norm of h|psi> over the terms."""
    out = 0.0
    for t in terms:
        sub = [state.dims[s] for s in t.sites]
        moved = qstate._contract(state.tensor(), t.sites, t.matrix, sub, sub)
        out = max(out, float(np.linalg.norm(moved)))
    return out


# --- POVMs ---------------------------------------------------------------------------------

def axis_projector(spin: Fraction | float, axis: str, m: Fraction | float) -> np.ndarray:
    v = qstate.spin_eigvec(float(spin), axis, float(m))
    return np.outer(v, v.conj())


def povm(spin: Fraction | float) -> dict[str, np.ndarray]:
    """Kraus operators F_x, F_y, F_z keeping the extremal S_alpha = +-S levels."""
    spin = Fraction(spin)
    if spin == 1:
        pref = 1 / np.sqrt(2)
    elif spin == Fraction(3, 2):
        pref = np.sqrt(2 / 3)
    else:
        raise ValueError(f"no complete POVM of this form for spin {spin}")
    return {a: pref * (axis_projector(spin, a, spin) + axis_projector(spin, a, -spin)) for a in AXES}


def general_povm(spin: Fraction | float) -> dict[str, np.ndarray]:
    """The unnormalized extremal-level form for any spin (complete only for S <= 3/2)."""
    spin = Fraction(spin)
    return {a: axis_projector(spin, a, spin) + axis_projector(spin, a, -spin) for a in AXES}


def completeness_defect(kraus: Sequence[np.ndarray]) -> float:
    """max |sum F^dag F - 1|."""
    return qstate.check_completeness(list(kraus))


def proportionality_defect(kraus: Sequence[np.ndarray]) -> float:
    """Distance of sum F^dag F from its best multiple of the identity."""
    total = sum(k.conj().T @ k for k in kraus)
    c = np.trace(total) / total.shape[0]
    return float(np.abs(total - c * np.eye(total.shape[0])).max())


@dataclass(frozen=True)
class POVMOutcomeMap:
    axes: tuple[str, ...]

    def __post_init__(self) -> None:
        for a in self.axes:
            if a not in AXES:
                raise ValueError(f"outcome must be x, y or z, got {a!r}")

    @classmethod
    def parse(cls, text: str) -> POVMOutcomeMap:
        return cls(tuple(text))

    def __str__(self) -> str:
        return "".join(self.axes)


def povm_all_sites(
    state: PureState,
    layout: ValenceBondLayout,
    policy: Sequence[str] | np.random.Generator,
) -> tuple[POVMOutcomeMap, PureState, float]:
    """Apply the POVM on every site in order; returns outcomes, post-state and probability."""
    axes = []
    prob = 1.0
    for v in range(layout.n):
        kraus_map = povm(layout.spins[v])
        kraus = [kraus_map[a] for a in AXES]
        choice = policy if isinstance(policy, np.random.Generator) else AXES.index(policy[v])
        rec, state = qstate.apply_povm(state, v, kraus, choice)
        axes.append(AXES[rec.outcome])
        prob *= rec.probability
    return POVMOutcomeMap(tuple(axes)), state, prob


def outcome_probability(state: PureState, layout: ValenceBondLayout, outcomes: POVMOutcomeMap) -> float:
    """Probability of a full outcome map, without sampling."""
    amps = state.tensor()
    for v, a in enumerate(outcomes.axes):
        f = povm(layout.spins[v])[a]
        amps = np.moveaxis(np.tensordot(f, amps, axes=([1], [v])), 0, v)
    return float(np.vdot(amps, amps).real)


# --- domains -------------------------------------------------------------------------------

@dataclass(frozen=True)
class DomainGraph:
    domains: tuple[tuple[int, ...], ...]
    axes: tuple[str, ...]
    graph: Graph
    frozen: tuple[bool, ...] = field(default=())

    def domain_of(self, v: int) -> int:
        for i, d in enumerate(self.domains):
            if v in d:
                return i
        raise KeyError(v)

    def to_json(self) -> dict:
        return {
            "domains": [list(d) for d in self.domains],
            "axes": list(self.axes),
            "frozen": list(self.frozen),
            "graph": self.graph.to_json(),
        }


def domain_contract(layout: ValenceBondLayout, outcomes: POVMOutcomeMap) -> DomainGraph:
    """Merge bonded sites with equal outcome; inter-domain bond counts reduced mod 2.

    A z domain holding a dangling virtual qubit is marked frozen: the fixed |0>
    reference pins its logical value.
    """
    if len(outcomes.axes) != layout.n:
        raise ValueError("outcome map must cover every site")
    parent = list(range(layout.n))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in layout.bonds:
        if outcomes.axes[u] == outcomes.axes[v]:
            parent[find(u)] = find(v)
    groups: dict[int, list[int]] = {}
    for v in range(layout.n):
        groups.setdefault(find(v), []).append(v)
    domains = sorted(tuple(sorted(g)) for g in groups.values())
    index = {v: i for i, d in enumerate(domains) for v in d}
    counts: dict[tuple[int, int], int] = {}
    for u, v in layout.bonds:
        a, b = index[u], index[v]
        if a != b:
            key = (min(a, b), max(a, b))
            counts[key] = counts.get(key, 0) + 1
    edges = [k for k, c in counts.items() if c % 2]
    axes = tuple(outcomes.axes[d[0]] for d in domains)
    frozen = tuple(
        axes[i] == "z" and any(layout.dangling(v) for v in d) for i, d in enumerate(domains)
    )
    return DomainGraph(tuple(domains), axes, Graph.from_edges(len(domains), edges), frozen)


# --- encoding reduction ----------------------------------------------------------------------

def extremal_pair(spin: Fraction | float, axis: str) -> tuple[np.ndarray, np.ndarray]:
    """|S_axis = +S> and |S_axis = -S>."""
    s = float(spin)
    return qstate.spin_eigvec(s, axis, s), qstate.spin_eigvec(s, axis, -s)


def reduce_domain(
    state: PureState,
    positions: Sequence[int],
    spin: Fraction | float,
    axis: str,
    policy: int | np.random.Generator = 0,
) -> tuple[PureState, int]:
    """Collapse an antiferromagnetic domain onto its first site.

    Every other site is measured in (|+S> +- |-S>)/sqrt2 (completed to a full
    basis); outcome t contributes Z^t on the logical qubit, which is undone.
    The first site is then mapped to a qubit by |0><+S| + |1><-S|. Returns
    the new state (remaining sites keep their order) and the outcome parity.
    """
    up, dn = extremal_pair(spin, axis)
    basis = qstate.complete_basis([(up + dn) / np.sqrt(2), (up - dn) / np.sqrt(2)])
    rep, rest = positions[0], sorted(positions[1:], reverse=True)
    parity = 0
    for p in rest:
        rec, state = qstate.measure(state, p, basis, policy, label=f"domain-{axis}")
        if rec.outcome > 1:
            raise qstate.ZeroProbabilityError("state left the extremal subspace of a domain site")
        parity ^= rec.outcome
        if p < rep:
            rep -= 1
    state = qstate.apply_map(state, rep, np.array([up.conj(), dn.conj()]))
    if parity:
        state = qstate.apply(state, qstate.LocalOperator((rep,), qstate.PAULI_Z))
    return state, parity


@dataclass(frozen=True, eq=False)
class ReducedEncoding:
    """Result of the encoding reduction.

    ``state`` holds one qubit per unfrozen domain (in domain order) and equals
    ``prod_q S_q^{corrections[q]}`` applied to the graph state of ``graph``.
    """

    domain_graph: DomainGraph
    live: tuple[int, ...]
    graph: Graph
    state: PureState
    corrections: tuple[int, ...]
    fidelity: float
    phase_defect: float

    def to_json(self) -> dict:
        return {
            "domain_graph": self.domain_graph.to_json(),
            "live_domains": list(self.live),
            "encoded_graph": self.graph.to_json(),
            "s_power_corrections": list(self.corrections),
            "fidelity": self.fidelity,
            "phase_defect": self.phase_defect,
        }


def fit_diagonal_corrections(state: PureState, g: Graph) -> tuple[tuple[int, ...], float, float]:
    """Find S-power corrections mapping the graph state of ``g`` onto ``state``.

    The phase of each single-excitation amplitude relative to |0...0> is
    compared with the graph state and rounded to a multiple of pi/2. Returns
    (powers, fidelity after correction, largest rounding error in radians).
    """
    k = g.n
    target = graphstate.build_dense(g).amplitudes
    amps = state.amplitudes
    if abs(amps[0]) < 1e-9:
        return (0,) * k, 0.0, float("inf")
    powers, defect = [], 0.0
    for q in range(k):
        idx = 1 << (k - 1 - q)
        rel = np.angle(amps[idx] / amps[0] / (target[idx] / target[0]))
        p = int(np.round(rel / (np.pi / 2)))
        defect = max(defect, abs(rel - p * np.pi / 2))
        powers.append(p % 4)
    bits = graphstate._bit_table(k)
    phase = (1j) ** (bits @ np.array(powers, dtype=np.int64))
    fid = abs(np.vdot(target * phase, amps))
    return tuple(powers), float(fid), float(defect)


def reduce_encoding(
    state: PureState,
    layout: ValenceBondLayout,
    outcomes: POVMOutcomeMap,
    policy: int | np.random.Generator = 0,
) -> ReducedEncoding:
    """Reduce a post-POVM state to one qubit per domain and compare with the domain graph state.

    Frozen domains (z domains pinned by a dangling |0>) are read out in the Z
    basis and dropped; their effect on neighbours is a Z correction, which
    the S-power fit absorbs.
    """
    dg = domain_contract(layout, outcomes)
    # sites present in ``state`` listed by original index; reduce domains right to left
    present = list(range(layout.n))
    for i in reversed(range(len(dg.domains))):
        d = dg.domains[i]
        pos = [present.index(v) for v in d]
        state, _ = reduce_domain(state, pos, layout.spins[d[0]], dg.axes[i], policy)
        for v in d[1:]:
            present.remove(v)
    # now one qubit per domain in domain order
    live = tuple(i for i in range(len(dg.domains)) if not dg.frozen[i])
    for i in reversed(range(len(dg.domains))):
        if dg.frozen[i]:
            if len(live) == 0 and i == 0:
                break
            probs = qstate.outcome_probabilities(state, i, qstate.basis_z())
            _, state = qstate.measure(state, i, qstate.basis_z(), int(np.argmax(probs)), label="frozen")
    graph = dg.graph.induced(list(live))
    if not live:
        return ReducedEncoding(dg, live, graph, state, (), 1.0, 0.0)
    powers, fid, defect = fit_diagonal_corrections(state, graph)
    return ReducedEncoding(dg, live, graph, state, powers, fid, defect)


def encoding_check(
    layout: ValenceBondLayout,
    outcomes: POVMOutcomeMap,
    aklt_state: PureState | None = None,
    policy: int | np.random.Generator = 0,
) -> ReducedEncoding:
    """POVM branch ``outcomes`` applied to the AKLT state, then reduced."""
    if aklt_state is None:
        aklt_state = build_aklt_dense(layout)
    _, post, _ = povm_all_sites(aklt_state, layout, outcomes.axes)
    return reduce_encoding(post, layout, outcomes, policy)


def nonzero_outcome_maps(layout: ValenceBondLayout, aklt_state: PureState | None = None, tol: float = 1e-12):
    """All outcome maps with nonzero probability, with their probabilities."""
    if aklt_state is None:
        aklt_state = build_aklt_dense(layout)
    out = []
    for axes in itertools.product(AXES, repeat=layout.n):
        om = POVMOutcomeMap(axes)
        p = outcome_probability(aklt_state, layout, om)
        if p > tol:
            out.append((om, p))
    return out


# --- NKZ deformation -------------------------------------------------------------------------

def deformation(a: float) -> np.ndarray:
    """D(a) = diag(sqrt3/a, 1, 1, sqrt3/a) on a spin-3/2 site."""
    if a <= 0:
        raise ValueError("deformation parameter must be positive")
    r = np.sqrt(3) / a
    return np.diag([r, 1.0, 1.0, r]).astype(complex)


def deformed_state(layout: ValenceBondLayout, a: float) -> PureState:
    """|psi(a)> proportional to (D(a)^-1)^{x N} |AKLT>."""
    if any(s != Fraction(3, 2) for s in layout.spins):
        raise ValueError("the deformation acts on spin-3/2 layouts")
    state = build_aklt_dense(layout)
    inv = np.linalg.inv(deformation(a))
    for v in range(layout.n):
        state = qstate.apply_map(state, v, inv)
    return state


def nkz_terms(layout: ValenceBondLayout, a: float) -> list[LocalOperator]:
    """(D x D) h (D x D)^dag per bond, with h the spin-3/2 edge term annihilating AKLT."""
    d = deformation(a)
    dd = np.kron(d, d)
    h = edge_term(Fraction(3, 2))
    m = dd @ h @ dd.conj().T
    return [LocalOperator((u, v), m, check_unitary=False, check_hermitian=True) for u, v in layout.bonds]


def nkz_check(a: float, layout: ValenceBondLayout) -> float:
    """Norm of H_NKZ |psi(a)> with |psi(a)> normalized."""
    state = deformed_state(layout, a)
    total = np.zeros_like(state.amplitudes)
    for t in nkz_terms(layout, a):
        sub = [state.dims[s] for s in t.sites]
        total += qstate._contract(state.tensor(), t.sites, t.matrix, sub, sub).reshape(-1)
    return float(np.linalg.norm(total))


def spin32_path(n: int) -> ValenceBondLayout:
    """Open path of spin-3/2 sites (a fragment of a trivalent lattice)."""
    return trivalent_layout(graphstate.path_graph(n))


def chain_spectrum(n: int) -> np.ndarray:
    """Spectrum of the periodic spin-1 AKLT chain."""
    lay = chain_layout(n, periodic=True)
    h = qstate.build_hamiltonian(aklt_hamiltonian(lay), lay.dims, cap=3**n)
    return qstate.exact_spectrum(h, cap=3**n)
