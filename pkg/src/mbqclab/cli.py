"""Batch command-line front end.

Every subcommand builds a JSON report with the inputs, the seed, a list of
checks (name, pass/fail, max deviation, tolerance) and a result payload. The
exit status is 0 iff every check passes, 1 if a check fails and 2 for bad
input. Reports are written with sorted keys and contain no timings, so equal
configurations give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from mbqclab import aklt, exercises, graphstate, mps, pattern, perco, qstate, spt

DEFAULT_TOL = 1e-10


@dataclass
class RunConfig:
    subcommand: str
    seed: int
    tol: float
    output: str | None
    inputs: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")


@dataclass
class Report:
    config: RunConfig
    checks: list[dict] = field(default_factory=list)
    result: dict = field(default_factory=dict)

    def check(self, name: str, deviation: float, tol: float | None = None, passed: bool | None = None) -> None:
        tol = self.config.tol if tol is None else tol
        deviation = float(deviation)
        ok = bool(deviation <= tol) if passed is None else bool(passed)
        self.checks.append({"name": name, "passed": ok, "max_deviation": deviation, "tolerance": tol})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_json(self) -> dict:
        return {
            "subcommand": self.config.subcommand,
            "inputs": self.config.inputs,
            "seed": self.config.seed,
            "checks": self.checks,
            "passed": self.passed,
            "result": self.result,
        }

    def dumps(self) -> str:
        return json.dumps(_plain(self.to_json()), sort_keys=True, indent=2) + "\n"


def _plain(obj):
    """Convert numpy scalars, tuples and fractions for JSON."""
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValueError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"{what} file {path} is not valid JSON: {exc}") from None


def _parse(loader: Callable[[Mapping], object], data: Mapping, what: str):
    """Run a from_json loader and turn missing/invalid fields into named diagnostics."""
    if not isinstance(data, Mapping):
        raise ValueError(f"{what} JSON must be an object")
    try:
        return loader(data)
    except KeyError as exc:
        raise ValueError(f"{what} JSON is missing field {exc.args[0]!r}") from None
    except (TypeError, IndexError) as exc:
        raise ValueError(f"{what} JSON is malformed: {exc}") from None


# --- teleport-demo --------------------------------------------------------------------------------

def cmd_teleport_demo(args: argparse.Namespace, report: Report) -> None:
    rng = np.random.default_rng(report.config.seed)
    inp = qstate.random_state((2,), rng)
    pat = pattern.teleport_pattern(args.xi)
    res = pattern.execute(pat, pattern.resource_for(pat, inp), rng)
    s = res.outcomes[0]
    # the raw residual, without byproduct removal, is H e^{i xi Z/2} Z^s |in>
    expected = qstate.PureState(inp.spec, mps.teleport_unitary(args.xi, s) @ inp.amplitudes)
    fid = qstate.fidelity_up_to_phase(res.residual, expected)
    report.check("post_state_matches_H_exp_Z_s", 1 - fid)
    report.result = {
        "xi": args.xi,
        "outcome": s,
        "probability": res.probability,
        "fidelity": fid,
        "input_state": inp.amplitudes,
        "output_state": res.residual.amplitudes,
    }


# --- compile / run-pattern --------------------------------------------------------------------

def _floats(text: str, count: int | None = None, what: str = "angles") -> list[float]:
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ValueError(f"{what}: expected numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ValueError(f"{what}: expected {count} values, got {len(vals)}")
    return vals


def build_pattern(args: argparse.Namespace) -> pattern.MeasurementPattern:
    if args.gate == "teleport":
        return pattern.teleport_pattern(_floats(args.angles, 1)[0])
    if args.gate == "euler":
        a, b, c = _floats(args.angles, 3)
        return pattern.compile_euler(a, b, c, absorb_z=args.absorb_z)
    if args.gate == "euler-chain":
        vals = _floats(args.angles)
        if not vals or len(vals) % 3:
            raise ValueError("angles: euler-chain needs a multiple of three values")
        return pattern.compile_euler_chain([tuple(vals[i:i + 3]) for i in range(0, len(vals), 3)])
    if args.gate == "brickwork-product":
        return pattern.brickwork_single_qubit_cell(*_floats(args.angles, 6))
    if args.gate == "brickwork-cnot":
        return pattern.brickwork_cnot_cell()
    raise ValueError(f"unknown gate {args.gate!r}")


def _input_for(pat: pattern.MeasurementPattern, rng: np.random.Generator) -> qstate.PureState:
    return qstate.random_state((2,) * len(pat.inputs), rng)


def cmd_compile(args: argparse.Namespace, report: Report) -> None:
    pat = build_pattern(args)
    rng = np.random.default_rng(report.config.seed)
    inp = _input_for(pat, rng)
    fids = pattern.branch_fidelities(pat, inp)
    report.check("all_branches_implement_target", 1 - float(fids.min()))
    report.result = {
        "pattern": pat.to_json(),
        "dependencies": [list(e) for e in pat.dependency_edges()],
        "branches": len(fids),
        "min_fidelity": float(fids.min()),
    }


def _parse_outcomes(text: str, count: int) -> list[int]:
    bits = [c for c in text if c in "01"]
    if len(bits) != len(text.replace(",", "").replace(" ", "")):
        raise ValueError(f"outcomes: only 0/1 allowed, got {text!r}")
    if len(bits) != count:
        raise ValueError(f"outcomes: pattern has {count} measurements, got {len(bits)} outcomes")
    return [int(c) for c in bits]


def cmd_run_pattern(args: argparse.Namespace, report: Report) -> None:
    data = _load_json(args.pattern, "pattern")
    if isinstance(data, Mapping) and "result" in data and "pattern" in data.get("result", {}):
        data = data["result"]["pattern"]  # a compile report
    pat = _parse(pattern.MeasurementPattern.from_json, data, "pattern")
    rng = np.random.default_rng(report.config.seed)
    inp = _input_for(pat, rng)
    policy = _parse_outcomes(args.outcomes, len(pat.steps)) if args.outcomes is not None else rng
    res = pattern.execute(pat, pattern.resource_for(pat, inp), policy)
    out = res.corrected()
    report.result = {
        "outcomes": list(res.outcomes),
        "angles": list(res.angles),
        "byproducts": [list(b) for b in res.byproducts],
        "probability": res.probability,
        "corrected_state": out.amplitudes,
    }
    if pat.target is not None:
        fid = qstate.fidelity_up_to_phase(out, pattern.apply_target(pat, inp))
        report.check("corrected_state_matches_target", 1 - fid)
        report.result["fidelity"] = fid


# --- graph-rewrite ----------------------------------------------------------------------------

def _parse_plan(raw) -> list[tuple[int, str, int]]:
    plan = []
    items = raw.split(",") if isinstance(raw, str) else raw
    for item in items:
        parts = item.split(":") if isinstance(item, str) else item
        if len(parts) != 3:
            raise ValueError(f"plan: each entry needs vertex, basis and outcome, got {item!r}")
        v, basis, o = parts
        basis = str(basis).upper()
        if basis not in ("Z", "Y"):
            raise ValueError(f"plan: basis must be Z or Y, got {basis!r}")
        plan.append((int(v), basis, int(o)))
    return plan


def cmd_graph_rewrite(args: argparse.Namespace, report: Report) -> None:
    data = _load_json(args.graph, "graph")
    if args.plan is not None:
        plan = _parse_plan(args.plan)
    elif isinstance(data, Mapping) and "plan" in data:
        plan = _parse_plan(data["plan"])
    else:
        raise ValueError("graph-rewrite needs a plan (--plan or a 'plan' field in the graph file)")
    desc = _parse(graphstate.GraphStateDesc.from_json, data, "graph")
    out = graphstate.apply_plan(desc, plan)
    report.result = {"plan": [list(p) for p in plan], "graph_state": out.to_json()}
    if desc.graph.n <= args.dense_limit:
        dense = graphstate.desc_to_dense(desc)
        positions = list(desc.live_sorted)
        for v, basis, o in plan:
            dense = graphstate.dense_measure(dense, positions.index(v), basis, o)
            positions.remove(v)
        fid = qstate.fidelity_up_to_phase(dense, graphstate.desc_to_dense(out))
        report.check("rewrite_matches_dense", 1 - fid)
        report.result["dense_fidelity"] = fid


# --- aklt -------------------------------------------------------------------------------------

def cmd_aklt(args: argparse.Namespace, report: Report) -> None:
    layout = _parse(aklt.ValenceBondLayout.from_json, _load_json(args.layout, "layout"), "layout")
    dim = int(np.prod(layout.dims))
    if dim > args.cap:
        raise qstate.CapExceededError(f"layout needs {dim} amplitudes, cap is {args.cap}")
    rng = np.random.default_rng(report.config.seed)
    state = aklt.build_aklt_dense(layout, cap=args.cap)
    report.check("hamiltonian_annihilates_state", aklt.hamiltonian_residual(state, aklt.aklt_hamiltonian(layout)))
    for spin in sorted(set(layout.spins)):
        if spin in (1, Fraction(3, 2)):
            report.check(f"povm_completeness_spin_{spin}", aklt.completeness_defect(aklt.povm(spin).values()), tol=1e-12)
    if args.outcomes is not None:
        policy = aklt.POVMOutcomeMap.parse(args.outcomes).axes
        if len(policy) != layout.n:
            raise ValueError(f"outcomes: layout has {layout.n} sites, got {len(policy)} outcomes")
    else:
        policy = rng
    outcomes, post, prob = aklt.povm_all_sites(state, layout, policy)
    enc = aklt.reduce_encoding(post, layout, outcomes, rng)
    report.check("encoded_graph_state_fidelity", 1 - enc.fidelity, tol=max(report.config.tol, 1e-9))
    report.result = {
        "layout": layout.to_json(),
        "outcome_map": str(outcomes),
        "probability": prob,
        "encoding": enc.to_json(),
    }


# --- spt-verify -------------------------------------------------------------------------------

BUILTIN_LATTICES: dict[str, Callable[[], object]] = {
    "square-torus": spt.square_torus,
    "honeycomb-torus": spt.honeycomb_torus,
    "single-plaquette": spt.single_plaquette,
    "triangular-torus": spt.triangular_torus,
    "union-jack-patch": spt.union_jack_patch,
    "union-jack-torus": spt.union_jack_torus,
    "single-triangle": spt.single_triangle,
}


def _verify_plaquettes(lat: spt.PlaquetteLattice, args: argparse.Namespace, report: Report, rng) -> None:
    cocycle = spt.cyclic_cocycle(args.order, args.level)
    report.check("cocycle_condition", spt.cocycle_defect(cocycle))
    report.check("cocycle_invariance", spt.invariance_defect(cocycle))
    lin = 0.0
    for s in range(lat.n_sites):
        lin = max(lin, spt.linear_defect(len(lat.site_plaquettes[s]), cocycle, spt.default_branching(lat, s)))
    report.check("linear_composition", lin)
    dim = args.order**lat.n_partons
    if dim > args.cap:
        raise qstate.CapExceededError(f"lattice needs {dim} amplitudes, cap is {args.cap}")
    worst = 0.0
    for g in range(1, args.order):
        worst = max(worst, 1 - spt.global_symmetry_fidelity(lat, g, cocycle))
    report.check("global_symmetry_invariance", worst)
    if args.order == 2 and lat.colors and all(len(s) >= 3 for s in lat.site_plaquettes):
        report.check("czx_invariance", 1 - spt.czx_invariance_fidelity(lat))
    report.result["lattice"] = lat.to_json()
    report.result["cocycle"] = cocycle.to_json()


def _verify_triangulation(t: spt.TriangulatedLattice, args: argparse.Namespace, report: Report, rng) -> None:
    if 2**t.n > args.cap:
        raise qstate.CapExceededError(f"lattice needs {2**t.n} amplitudes, cap is {args.cap}")
    for key, dev in spt.verify_ccz_identities(t, rng).items():
        report.check(key, dev)
    report.check("mm_stabilizers", spt.mm_check(t))
    if t.closed:
        # B_p = X_p S_p needs a closed link around p
        report.check("lg_plaquettes", spt.lg_check(t))
    if t.cross_sites:
        outcomes = {x: int(b) for x, b in zip(t.cross_sites, rng.integers(0, 2, len(t.cross_sites)))}
        report.check("mm_cross_measure", 1 - spt.cross_measure_fidelity(t, outcomes, "mm"))
        report.check("lg_cross_measure", 1 - spt.cross_measure_fidelity(t, outcomes, "lg"))
        ok = spt.complement_relation_holds(t, outcomes)
        report.check("mm_lg_complement", 0.0 if ok else 1.0, passed=ok)
        report.result["cross_outcomes"] = {str(k): v for k, v in sorted(outcomes.items())}
    report.result["lattice"] = t.to_json()


def cmd_spt_verify(args: argparse.Namespace, report: Report) -> None:
    rng = np.random.default_rng(report.config.seed)
    if args.lattice_file is not None:
        data = _load_json(args.lattice_file, "lattice")
        if isinstance(data, Mapping) and "site_plaquettes" in data:
            lat = _parse(spt.PlaquetteLattice.from_json, data, "plaquette lattice")
        else:
            lat = _parse(spt.TriangulatedLattice.from_json, data, "triangulation")
    else:
        lat = BUILTIN_LATTICES[args.lattice]()
    if isinstance(lat, spt.PlaquetteLattice):
        _verify_plaquettes(lat, args, report, rng)
    else:
        _verify_triangulation(lat, args, report, rng)


# --- percolate ---------------------------------------------------------------------------------

def _parse_grid(text: str | None, model: str) -> tuple[float, ...]:
    if text is None:
        return perco.DEFAULT_GRIDS[model]
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("pgrid: use start:stop:count or a comma list")
        lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
        return tuple(float(v) for v in np.round(np.linspace(lo, hi, num), 10))
    return tuple(_floats(text, what="pgrid"))


def cmd_percolate(args: argparse.Namespace, report: Report) -> None:
    sizes = [int(v) for v in _floats(args.sizes, what="sizes")]
    pgrid = _parse_grid(args.pgrid, args.model)
    rep = perco.estimate_threshold(args.model, sizes, pgrid, args.trials, report.config.seed, exact=args.exact)
    report.check("threshold_found", 0.0 if rep.threshold is not None else 1.0, passed=rep.threshold is not None)
    report.result = rep.to_json()
    if args.csv:
        Path(args.csv).write_text(rep.to_csv())


# --- exercises --------------------------------------------------------------------------------

def cmd_exercises(args: argparse.Namespace, report: Report) -> None:
    results = exercises.run_all(report.config.tol)
    for r in results:
        report.check(f"exercise_{r.exercise}", r.deviation)
    report.result = {
        "mapping": [
            {"exercise": s.exercise, "title": s.title, "operation": s.operation, "test_id": s.test_id}
            for s in exercises.EXERCISES
        ],
        "exercises": [r.to_json() for r in results],
        "exercises_covered": sorted(exercises.exercise_numbers_covered(results)),
    }


# --- wiring -----------------------------------------------------------------------------------

COMMANDS = {
    "teleport-demo": cmd_teleport_demo,
    "compile": cmd_compile,
    "run-pattern": cmd_run_pattern,
    "graph-rewrite": cmd_graph_rewrite,
    "aklt": cmd_aklt,
    "spt-verify": cmd_spt_verify,
    "percolate": cmd_percolate,
    "exercises": cmd_exercises,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit seed (recorded in the report)")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="deviation tolerance for checks")
    common.add_argument("--output", "-o", default=None, help="write the JSON report here (default: stdout)")

    parser = argparse.ArgumentParser(prog="mbqclab", description="Measurement-based quantum computation toolkit.")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="subcommand")

    p = sub.add_parser("teleport-demo", parents=[common], help="one-step gate teleportation")
    p.add_argument("--xi", type=float, default=0.0)

    p = sub.add_parser("compile", parents=[common], help="compile a gate to a measurement pattern")
    p.add_argument(
        "--gate",
        choices=["teleport", "euler", "euler-chain", "brickwork-product", "brickwork-cnot"],
        default="euler",
    )
    p.add_argument("--angles", default="0 0 0", help="angles, comma or space separated")
    p.add_argument("--absorb-z", action="store_true", help="fold Z byproducts into later angles")

    p = sub.add_parser("run-pattern", parents=[common], help="execute a pattern JSON on its resource state")
    p.add_argument("pattern", help="pattern JSON (or a compile report)")
    p.add_argument("--outcomes", default=None, help="forced outcome string, e.g. 0110")

    p = sub.add_parser("graph-rewrite", parents=[common], help="apply Z/Y measurement rewrite rules")
    p.add_argument("graph", help="graph JSON {n, edges[, plan]}")
    p.add_argument("--plan", default=None, help="comma list of vertex:basis:outcome, e.g. 1:Y:0,3:Z:1")
    p.add_argument("--dense-limit", type=int, default=16, help="cross-check with dense simulation up to this size")

    p = sub.add_parser("aklt", parents=[common], help="POVM and encoded graph state of an AKLT layout")
    p.add_argument("layout", help="layout JSON {spins, bonds} or graph JSON {n, edges}")
    p.add_argument("--outcomes", default=None, help="forced outcome map, e.g. xzzy")
    p.add_argument("--cap", type=int, default=qstate.DEFAULT_CAP)

    p = sub.add_parser("spt-verify", parents=[common], help="check SPT and CCZ identities on a lattice")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--lattice-file", default=None, help="plaquette lattice or triangulation JSON")
    group.add_argument("--lattice", choices=sorted(BUILTIN_LATTICES), default="triangular-torus")
    p.add_argument("--order", type=int, default=2, help="cyclic group order for plaquette lattices")
    p.add_argument("--level", type=int, default=1, help="cocycle level")
    p.add_argument("--cap", type=int, default=qstate.DEFAULT_CAP)

    p = sub.add_parser("percolate", parents=[common], help="spanning curves and threshold estimate")
    p.add_argument("--model", choices=list(perco.MODEL_KINDS), default="site")
    p.add_argument("--sizes", default="16,32,64")
    p.add_argument("--pgrid", default=None, help="comma list or start:stop:count")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--exact", action="store_true", help="aklt-domain: sample POVM outcomes exactly")
    p.add_argument("--csv", default=None, help="also dump curves as CSV")

    sub.add_parser("exercises", parents=[common], help="run the appendix exercise checks")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    skip = {"subcommand", "seed", "tol", "output"}
    inputs = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    inputs["tol"] = args.tol
    return RunConfig(args.subcommand, args.seed, args.tol, args.output, inputs)


def run(config: RunConfig, args: argparse.Namespace) -> Report:
    report = Report(config)
    COMMANDS[config.subcommand](args, report)
    return report


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config(args)
        report = run(config, args)
    except qstate.CapExceededError as exc:
        print(f"mbqclab {args.subcommand}: size cap exceeded: {exc}", file=sys.stderr)
        return 2
    except (ValueError, qstate.ZeroProbabilityError) as exc:
        print(f"mbqclab {args.subcommand}: error: {exc}", file=sys.stderr)
        return 2
    text = report.dumps()
    if config.output is None:
        sys.stdout.write(text)
    else:
        Path(config.output).write_text(text)
        status = "PASS" if report.passed else "FAIL"
        n_ok = sum(c["passed"] for c in report.checks)
        print(f"{config.subcommand}: {status} ({n_ok}/{len(report.checks)} checks) -> {config.output}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
