"""Adaptive measurement patterns on cluster-state wires.

Every measured site is read out in the X-Y plane basis ``|±xi>``; outcome
``s`` teleports the logical qubit one column along its wire while applying
``U(xi, s) = H exp(i xi Z/2) Z^s``.

Byproducts are tracked as a Pauli frame per wire: the true logical state is
``X^x Z^z |target>`` with ``x`` and ``z`` parities (sets of step indices).
The frame rules used by the compiler are

==========================  ===================================================
event                        effect
==========================  ===================================================
teleport step, outcome s     measured angle ``(-1)^x xi``; new frame ``x' = z + s``, ``z' = x``
same, with ``absorb_z``      angle ``(-1)^x xi + pi z``; new frame ``x' = s``, ``z' = x``
CZ between wires a, b        ``z_a += x_b``, ``z_b += x_a``
==========================  ===================================================

Both rules are checked branch by branch against the dense simulator in the
tests.
"""

from __future__ import annotations

import itertools
import json
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from mbqclab import graphstate, qstate
from mbqclab.graphstate import Graph
from mbqclab.mps import teleport_unitary
from mbqclab.qstate import CZ, PAULI_X, PAULI_Z, PureState

Parity = frozenset


@dataclass(frozen=True)
class Step:
    site: int
    angle: float
    sign_deps: frozenset[int] = frozenset()
    offset_deps: frozenset[int] = frozenset()
    wire: int | None = None

    def actual_angle(self, outcomes: Sequence[int]) -> float:
        sign = (-1) ** (sum(outcomes[j] for j in self.sign_deps) % 2)
        shift = np.pi * (sum(outcomes[j] for j in self.offset_deps) % 2)
        return sign * self.angle + shift


@dataclass(frozen=True)
class ByproductSpec:
    x: tuple[frozenset[int], ...]
    z: tuple[frozenset[int], ...]

    def evaluate(self, outcomes: Sequence[int]) -> list[tuple[int, int]]:
        """Concrete (x, z) exponents per wire."""
        return [
            (sum(outcomes[j] for j in xs) % 2, sum(outcomes[j] for j in zs) % 2)
            for xs, zs in zip(self.x, self.z)
        ]


@dataclass(frozen=True, eq=False)
class MeasurementPattern:
    steps: tuple[Step, ...]
    n_sites: int
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    byproduct: ByproductSpec
    resource: Mapping = field(default_factory=dict)
    target: np.ndarray | None = None

    def __post_init__(self) -> None:
        seen = set()
        for i, st in enumerate(self.steps):
            if st.site in seen:
                raise ValueError(f"site {st.site} measured twice")
            seen.add(st.site)
            if any(j >= i for j in st.sign_deps | st.offset_deps):
                raise ValueError(f"step {i} depends on a step that is not earlier")
        if seen & set(self.outputs):
            raise ValueError("output sites must not be measured")
        for xs, zs in zip(self.byproduct.x, self.byproduct.z):
            if any(j >= len(self.steps) for j in xs | zs):
                raise ValueError("byproduct refers to an unknown step")

    @property
    def n_wires(self) -> int:
        return len(self.outputs)

    def dependency_edges(self) -> list[tuple[int, int]]:
        return [(j, i) for i, st in enumerate(self.steps) for j in sorted(st.sign_deps | st.offset_deps)]

    def to_json(self) -> dict:
        out = {
            "n_sites": self.n_sites,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "steps": [
                {
                    "site": st.site,
                    "angle": st.angle,
                    "sign_deps": sorted(st.sign_deps),
                    "offset_deps": sorted(st.offset_deps),
                    "wire": st.wire,
                }
                for st in self.steps
            ],
            "byproduct": {
                "x": [sorted(s) for s in self.byproduct.x],
                "z": [sorted(s) for s in self.byproduct.z],
            },
            "resource": dict(self.resource),
        }
        if self.target is not None:
            out["target"] = [[[float(v.real), float(v.imag)] for v in row] for row in self.target]
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> MeasurementPattern:
        try:
            steps = tuple(
                Step(
                    int(s["site"]),
                    float(s["angle"]),
                    frozenset(s.get("sign_deps", [])),
                    frozenset(s.get("offset_deps", [])),
                    s.get("wire"),
                )
                for s in data["steps"]
            )
            byp = ByproductSpec(
                tuple(frozenset(v) for v in data["byproduct"]["x"]),
                tuple(frozenset(v) for v in data["byproduct"]["z"]),
            )
            target = None
            if "target" in data:
                target = np.array([[complex(re, im) for re, im in row] for row in data["target"]])
            return cls(
                steps,
                int(data["n_sites"]),
                tuple(data["inputs"]),
                tuple(data["outputs"]),
                byp,
                dict(data.get("resource", {})),
                target,
            )
        except KeyError as exc:
            raise ValueError(f"pattern JSON is missing field {exc.args[0]!r}") from None


# --- frame propagation ------------------------------------------------------------------

def propagate_byproduct(
    frame: tuple[frozenset[int], frozenset[int]],
    step: Step,
    index: int,
    absorb_z: bool = False,
) -> tuple[Step, tuple[frozenset[int], frozenset[int]]]:
    """Adapt ``step`` to the incoming wire frame and return the outgoing frame.

    ``index`` is the position of ``step`` in the pattern (its outcome variable).
    """
    x, z = frame
    if absorb_z:
        adjusted = replace(step, sign_deps=frozenset(x), offset_deps=frozenset(z))
        return adjusted, (frozenset({index}), frozenset(x))
    adjusted = replace(step, sign_deps=frozenset(x), offset_deps=frozenset())
    return adjusted, (frozenset(z) ^ {index}, frozenset(x))


@dataclass
class WireProgram:
    """Sequence of teleport steps and inter-wire CZ links on parallel wires."""

    n_wires: int
    ops: list[tuple] = field(default_factory=list)

    def rotate(self, wire: int, angle: float) -> WireProgram:
        self.ops.append(("m", wire, float(angle)))
        return self

    def link(self, a: int, b: int) -> WireProgram:
        self.ops.append(("cz", a, b))
        return self

    def length(self, wire: int) -> int:
        return sum(1 for op in self.ops if op[0] == "m" and op[1] == wire)


def compile_program(
    program: WireProgram,
    site_of: Callable[[int, int], int],
    n_sites: int,
    resource: Mapping,
    target: np.ndarray | None = None,
    absorb_z: bool = False,
) -> MeasurementPattern:
    """Turn a wire program into an adaptive pattern; ``site_of(wire, column)`` places sites."""
    frames = [(frozenset(), frozenset()) for _ in range(program.n_wires)]
    col = [0] * program.n_wires
    steps: list[Step] = []
    for op in program.ops:
        if op[0] == "m":
            _, w, angle = op
            raw = Step(site_of(w, col[w]), angle, wire=w)
            st, frames[w] = propagate_byproduct(frames[w], raw, len(steps), absorb_z)
            steps.append(st)
            col[w] += 1
        else:
            _, a, b = op
            (xa, za), (xb, zb) = frames[a], frames[b]
            frames[a] = (xa, za ^ xb)
            frames[b] = (xb, zb ^ xa)
    inputs = tuple(site_of(w, 0) for w in range(program.n_wires))
    outputs = tuple(site_of(w, col[w]) for w in range(program.n_wires))
    byp = ByproductSpec(tuple(f[0] for f in frames), tuple(f[1] for f in frames))
    return MeasurementPattern(tuple(steps), n_sites, inputs, outputs, byp, dict(resource), target)


# --- target gates ---------------------------------------------------------------------------

def euler_xzx(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """R(alpha, beta, gamma) = exp(-i alpha X/2) exp(-i beta Z/2) exp(-i gamma X/2)."""
    return qstate.rx(alpha) @ qstate.rz(beta) @ qstate.rx(gamma)


def euler_zxz(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """exp(-i gamma Z/2) exp(-i beta X/2) exp(-i alpha Z/2): alpha about Z first."""
    return qstate.rz(gamma) @ qstate.rx(beta) @ qstate.rz(alpha)


# --- compilers ----------------------------------------------------------------------------------

def compile_euler(alpha: float, beta: float, gamma: float, absorb_z: bool = False) -> MeasurementPattern:
    """Four steps on a five-site open chain implementing R(alpha, beta, gamma).

    Base angles are (0, -gamma, -beta, -alpha); the frame rules reproduce the
    adaptive signs ``xi2 = -(-1)^{s1} gamma``, ``xi3 = -(-1)^{s2} beta``,
    ``xi4 = -(-1)^{s1+s3} alpha`` and byproduct ``Z^{s1+s3} X^{s2+s4}``.
    """
    prog = WireProgram(1).rotate(0, 0.0).rotate(0, -gamma).rotate(0, -beta).rotate(0, -alpha)
    return compile_program(
        prog, lambda w, c: c, 5, {"kind": "chain", "n": 5}, euler_xzx(alpha, beta, gamma), absorb_z
    )


def compile_euler_chain(angles: Sequence[tuple[float, float, float]]) -> MeasurementPattern:
    """Consecutive Euler blocks on one chain; the target is R_k ... R_2 R_1."""
    prog = WireProgram(1)
    target = np.eye(2, dtype=complex)
    for a, b, g in angles:
        prog.rotate(0, 0.0).rotate(0, -g).rotate(0, -b).rotate(0, -a)
        target = euler_xzx(a, b, g) @ target
    n = 4 * len(angles) + 1
    return compile_program(prog, lambda w, c: c, n, {"kind": "chain", "n": n}, target)


def teleport_pattern(xi: float) -> MeasurementPattern:
    """One step on a two-site chain; the target is H exp(i xi Z/2)."""
    prog = WireProgram(1).rotate(0, xi)
    return compile_program(prog, lambda w, c: c, 2, {"kind": "chain", "n": 2}, teleport_unitary(xi, 0))


BRICK_COLS = 5


def _cell_program(angles: Sequence[Sequence[float]]) -> WireProgram:
    """2-wire, 4-column program with links at columns 2 and 4."""
    prog = WireProgram(2)
    for c in range(4):
        if c == 2:
            prog.link(0, 1)
        for w in range(2):
            prog.rotate(w, angles[w][c])
    prog.link(0, 1)
    return prog


def _cell_site(w: int, c: int) -> int:
    return w * BRICK_COLS + c


def brickwork_single_qubit_cell(
    alpha: float, beta: float, gamma: float, alpha2: float, beta2: float, gamma2: float
) -> MeasurementPattern:
    """Two independent single-qubit rotations on a 2x5 brickwork cell.

    Each wire is measured at (-alpha, -beta, -gamma, 0); the two CZ links cancel
    and the cell implements ``euler_zxz(alpha, beta, gamma)`` on each wire.
    """
    angles = [[-alpha, -beta, -gamma, 0.0], [-alpha2, -beta2, -gamma2, 0.0]]
    target = np.kron(euler_zxz(alpha, beta, gamma), euler_zxz(alpha2, beta2, gamma2))
    return compile_program(
        _cell_program(angles), _cell_site, 2 * BRICK_COLS, {"kind": "brickwork", "rows": 2, "cols": BRICK_COLS}, target
    )


# angles in the U(xi, s) convention; pi/2 here is the exp(i pi Z/4) of the circuit
CNOT_CELL_ANGLES = ((0.0, 0.0, np.pi / 2, 0.0), (0.0, np.pi / 2, 0.0, -np.pi / 2))


def brickwork_cnot_cell() -> MeasurementPattern:
    """CNOT (wire 0 controls wire 1) on a 2x5 brickwork cell."""
    return compile_program(
        _cell_program(CNOT_CELL_ANGLES),
        _cell_site,
        2 * BRICK_COLS,
        {"kind": "brickwork", "rows": 2, "cols": BRICK_COLS},
        qstate.CNOT,
    )


def cell_operator(angles: Sequence[Sequence[float]], outcomes: Sequence[Sequence[int]]) -> np.ndarray:
    """Direct circuit translation of a 2x5 cell for concrete angles and outcomes.

    ``CZ (U4 x U4') (U3 x U3') CZ (U2 x U2') (U1 x U1')`` with
    ``U = H exp(i xi Z/2) Z^s``; no byproduct bookkeeping.
    """
    out = np.eye(4, dtype=complex)
    for c in range(4):
        if c == 2:
            out = CZ @ out
        layer = np.kron(teleport_unitary(angles[0][c], outcomes[0][c]), teleport_unitary(angles[1][c], outcomes[1][c]))
        out = layer @ out
    return CZ @ out


# --- resources -------------------------------------------------------------------------------

def graph_resource(g: Graph, input_sites: Sequence[int] = (), input_state: PureState | None = None) -> PureState:
    """prod CZ over ``g`` applied to |in> on ``input_sites`` and |+> elsewhere."""
    n = g.n
    if input_state is None:
        amps = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    else:
        k = len(input_sites)
        if input_state.dims != (2,) * k:
            raise ValueError("input state must hold one qubit per input site")
        rest = [i for i in range(n) if i not in input_sites]
        plus = np.full(2 ** len(rest), 2 ** (-len(rest) / 2), dtype=complex)
        tensor = np.tensordot(input_state.tensor(), plus.reshape((2,) * len(rest)), axes=0)
        order = list(input_sites) + rest
        amps = np.transpose(tensor, np.argsort(order)).reshape(-1)
    bits = graphstate._bit_table(n)
    parity = np.zeros(2**n, dtype=np.int64)
    for u, v in g.edges:
        parity ^= bits[:, u] & bits[:, v]
    return PureState(qstate.SiteSpec((2,) * n), amps * (1 - 2 * parity))


def chain_resource(n: int, input_state: PureState | None = None) -> PureState:
    return graph_resource(graphstate.path_graph(n), (0,) if input_state is not None else (), input_state)


def build_brickwork(rows: int, cols: int, input_state: PureState | None = None) -> PureState:
    """Brickwork graph state; an optional input sits on column 0 of every wire."""
    g = graphstate.brickwork_graph(rows, cols)
    inputs = tuple(r * cols for r in range(rows)) if input_state is not None else ()
    return graph_resource(g, inputs, input_state)


def resource_for(pattern: MeasurementPattern, input_state: PureState | None = None) -> PureState:
    kind = pattern.resource.get("kind")
    if kind == "chain":
        return chain_resource(int(pattern.resource["n"]), input_state)
    if kind == "brickwork":
        return build_brickwork(int(pattern.resource["rows"]), int(pattern.resource["cols"]), input_state)
    raise ValueError(f"pattern has no known resource kind: {kind!r}")


# --- execution -------------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExecutionResult:
    residual: PureState
    outcomes: tuple[int, ...]
    angles: tuple[float, ...]
    byproducts: tuple[tuple[int, int], ...]
    probability: float

    def corrected(self) -> PureState:
        return remove_byproducts(self.residual, self.byproducts)


def execute(
    pattern: MeasurementPattern,
    resource: PureState,
    policy: Sequence[int] | np.random.Generator,
) -> ExecutionResult:
    """Run the steps in order; the residual holds the output sites in wire order."""
    if resource.n_sites < pattern.n_sites:
        raise ValueError("resource state has fewer sites than the pattern")
    positions = list(range(resource.n_sites))  # original site at each current position
    state = resource
    outcomes: list[int] = []
    angles: list[float] = []
    prob = 1.0
    for i, st in enumerate(pattern.steps):
        angle = st.actual_angle(outcomes)
        choice = policy if isinstance(policy, np.random.Generator) else int(policy[i])
        rec, state = qstate.measure(state, positions.index(st.site), qstate.basis_xy(angle), choice, label=f"xy({angle:.6g})")
        positions.remove(st.site)
        outcomes.append(rec.outcome)
        angles.append(angle)
        prob *= rec.probability
    # reorder remaining sites: outputs in wire order first, then any spectators
    order = [positions.index(s) for s in pattern.outputs] + [
        i for i, s in enumerate(positions) if s not in pattern.outputs
    ]
    if order != list(range(len(order))):
        tensor = np.transpose(state.tensor(), order)
        state = PureState(qstate.SiteSpec(tuple(state.dims[i] for i in order)), tensor.reshape(-1))
    return ExecutionResult(state, tuple(outcomes), tuple(angles), tuple(pattern.byproduct.evaluate(outcomes)), prob)


def remove_byproducts(state: PureState, byproducts: Sequence[tuple[int, int]]) -> PureState:
    """Undo X^x Z^z on the first len(byproducts) sites (Z^z X^x is its inverse up to sign)."""
    for w, (x, z) in enumerate(byproducts):
        op = np.linalg.matrix_power(PAULI_Z, z) @ np.linalg.matrix_power(PAULI_X, x)
        state = qstate.apply(state, qstate.LocalOperator((w,), op))
    return state


def apply_target(pattern: MeasurementPattern, input_state: PureState) -> PureState:
    if pattern.target is None:
        raise ValueError("pattern carries no target unitary")
    return PureState(input_state.spec, pattern.target @ input_state.amplitudes)


def all_branches(pattern: MeasurementPattern) -> list[tuple[int, ...]]:
    return list(itertools.product((0, 1), repeat=len(pattern.steps)))


def branch_fidelities(pattern: MeasurementPattern, input_state: PureState) -> np.ndarray:
    """Post-correction fidelity with the target for every outcome branch."""
    resource = resource_for(pattern, input_state)
    expected = apply_target(pattern, input_state)
    out = []
    for branch in all_branches(pattern):
        res = execute(pattern, resource, branch)
        out.append(qstate.fidelity_up_to_phase(res.corrected(), expected))
    return np.array(out)


def z_readout_distribution(state: PureState) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2


def flip_readout(dist: np.ndarray, n_qubits: int, x_flips: Sequence[int]) -> np.ndarray:
    """Relabel a Z-basis distribution by classically flipping the bits with x = 1."""
    mask = 0
    for w, x in enumerate(x_flips):
        if x:
            mask |= 1 << (n_qubits - 1 - w)
    idx = np.arange(len(dist))
    out = np.empty_like(dist)
    out[idx ^ mask] = dist
    return out


def pattern_json_dumps(pattern: MeasurementPattern) -> str:
    return json.dumps(pattern.to_json(), sort_keys=True)
