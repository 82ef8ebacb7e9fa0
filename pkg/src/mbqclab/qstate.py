"""Dense pure-state simulator over sites of mixed local dimension.

Amplitudes are stored as a flat complex vector. Site 0 is the most
significant index and the flattening is row-major over ``dims``, so a
basis label ``(k0, k1, ..., kn)`` lives at ``np.ravel_multi_index(k, dims)``.

Every other module in the package uses this as its ground-truth oracle.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import reduce
from typing import Union

import numpy as np
import scipy.linalg

DEFAULT_CAP = 2**24
SPECTRUM_CAP = 4096
NORM_TOL = 1e-10
ZERO_PROB = 1e-14

#: Either a forced outcome index or a generator to draw from.
OutcomePolicy = Union[int, np.random.Generator]


class CapExceededError(ValueError):
    """Raised when a state or operator would exceed the configured size cap."""


class ZeroProbabilityError(ValueError):
    """Raised when a forced outcome has (numerically) zero probability."""


@dataclass(frozen=True)
class SiteSpec:
    dims: tuple[int, ...]
    cap: int = DEFAULT_CAP

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if any(d < 2 for d in self.dims):
            raise ValueError(f"every local dimension must be >= 2, got {self.dims}")
        if self.size > self.cap:
            raise CapExceededError(
                f"state with dims {self.dims} has {self.size} amplitudes, cap is {self.cap}"
            )

    @property
    def size(self) -> int:
        return int(np.prod(self.dims, dtype=object)) if self.dims else 1

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    def index(self, labels: Sequence[int]) -> int:
        """Flat amplitude index of a basis label (site 0 most significant)."""
        return int(np.ravel_multi_index(tuple(labels), self.dims))

    def labels(self, index: int) -> tuple[int, ...]:
        return tuple(int(k) for k in np.unravel_index(index, self.dims))


@dataclass(frozen=True, eq=False)
class PureState:
    spec: SiteSpec
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.spec.size:
            raise ValueError(f"expected {self.spec.size} amplitudes, got {amps.size}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm {norm})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, dims: Sequence[int], vector, cap: int = DEFAULT_CAP) -> PureState:
        """Build a state from an unnormalized amplitude vector."""
        spec = SiteSpec(tuple(dims), cap)
        vec = np.asarray(vector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm < ZERO_PROB:
            raise ZeroProbabilityError("cannot normalize a zero vector")
        return cls(spec, vec / norm)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.spec.dims

    @property
    def n_sites(self) -> int:
        return self.spec.n_sites

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def amplitude(self, labels: Sequence[int]) -> complex:
        return complex(self.amplitudes[self.spec.index(labels)])


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """A matrix acting on an ordered tuple of sites.

    With ``check_unitary`` / ``check_hermitian`` the property is validated
    on construction.
    """

    sites: tuple[int, ...]
    matrix: np.ndarray
    check_unitary: bool = field(default=False, repr=False)
    check_hermitian: bool = field(default=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {mat.shape}")
        if len(set(self.sites)) != len(self.sites):
            raise ValueError(f"repeated site in {self.sites}")
        object.__setattr__(self, "matrix", mat)
        if self.check_unitary and not self.is_unitary():
            raise ValueError("operator is not unitary")
        if self.check_hermitian and not self.is_hermitian():
            raise ValueError("operator is not Hermitian")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_unitary(self, tol: float = 1e-10) -> bool:
        return np.allclose(self.matrix.conj().T @ self.matrix, np.eye(self.dim), atol=tol)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return np.allclose(self.matrix, self.matrix.conj().T, atol=tol)

    def on(self, *sites: int) -> LocalOperator:
        """Same matrix acting on different sites."""
        return LocalOperator(sites, self.matrix)

    def __matmul__(self, other: LocalOperator) -> LocalOperator:
        if self.sites != other.sites:
            raise ValueError("operator product requires identical site tuples")
        return LocalOperator(self.sites, self.matrix @ other.matrix)


@dataclass(frozen=True)
class MeasurementRecord:
    site: int | tuple[int, ...]
    basis_label: str
    outcome: int
    probability: float

    def __post_init__(self) -> None:
        if not -1e-12 <= self.probability <= 1 + 1e-12:
            raise ValueError(f"probability {self.probability} outside [0, 1]")
        if self.outcome < 0:
            raise ValueError("outcome index must be non-negative")


# --- single-site kets and bases -------------------------------------------

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def basis_ket(dim: int, k: int) -> np.ndarray:
    ket = np.zeros(dim, dtype=complex)
    ket[k] = 1.0
    return ket


def xy_ket(xi: float, sign: int = +1, symmetric: bool = False) -> np.ndarray:
    """|±xi> = (|0> ± e^{i xi}|1>)/sqrt2.

    With ``symmetric=True`` the alternative (e^{-i xi/2}|0> ± e^{i xi/2}|1>)/sqrt2
    is returned; it differs by the global phase e^{-i xi/2}, which removes
    the overall phase from the teleported gate.
    """
    if symmetric:
        return np.array([np.exp(-0.5j * xi), sign * np.exp(0.5j * xi)]) / np.sqrt(2)
    return np.array([1.0, sign * np.exp(1j * xi)]) / np.sqrt(2)


def basis_xy(xi: float, symmetric: bool = False) -> list[np.ndarray]:
    """Measurement basis in the X-Y plane; outcome 0 is ``+``, outcome 1 is ``-``."""
    return [xy_ket(xi, +1, symmetric), xy_ket(xi, -1, symmetric)]


def basis_z() -> list[np.ndarray]:
    return [KET0, KET1]


def basis_x() -> list[np.ndarray]:
    return basis_xy(0.0)


def basis_y() -> list[np.ndarray]:
    return basis_xy(np.pi / 2)


def complete_basis(kets: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Extend orthonormal ``kets`` to a full orthonormal basis of their space."""
    cols = np.column_stack([np.asarray(k, dtype=complex) for k in kets])
    dim = cols.shape[0]
    q, _ = np.linalg.qr(np.hstack([cols, np.eye(dim)]))
    extra = [q[:, j] for j in range(cols.shape[1], dim)]
    return [np.asarray(k, dtype=complex) for k in kets] + extra


# --- gates ------------------------------------------------------------------

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PHASE_S = np.diag([1, 1j])
CZ = np.diag([1, 1, 1, -1]).astype(complex)
CCZ = np.diag([1, 1, 1, 1, 1, 1, 1, -1]).astype(complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)

PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


def rz(theta: float) -> np.ndarray:
    """exp(-i theta Z / 2)."""
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def rx(theta: float) -> np.ndarray:
    """exp(-i theta X / 2)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


_FIXED_GATES = {
    "I": PAULI_I,
    "X": PAULI_X,
    "Y": PAULI_Y,
    "Z": PAULI_Z,
    "H": HADAMARD,
    "S": PHASE_S,
    "Sdag": PHASE_S.conj().T,
    "CZ": CZ,
    "CCZ": CCZ,
    "CNOT": CNOT,
}
_PARAM_GATES = {"RZ": rz, "RX": rx}


def standard_gate(name: str, params: Sequence[float] = (), sites: Sequence[int] | None = None) -> LocalOperator:
    """Exact matrix of a named gate as a LocalOperator.

    ``sites`` defaults to ``0..k-1`` for a k-qubit gate.
    """
    params = tuple(params)
    if name in _FIXED_GATES:
        if params:
            raise ValueError(f"gate {name} takes no parameters, got {len(params)}")
        mat = _FIXED_GATES[name]
    elif name in _PARAM_GATES:
        if len(params) != 1:
            raise ValueError(f"gate {name} takes exactly one parameter, got {len(params)}")
        mat = _PARAM_GATES[name](params[0])
    else:
        raise ValueError(f"unknown gate {name!r}")
    k = int(np.log2(mat.shape[0]))
    if sites is None:
        sites = range(k)
    return LocalOperator(tuple(sites), mat)


def kron(*mats: np.ndarray) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


# --- spin operators -----------------------------------------------------------

def spin_matrices(spin: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Sx, Sy, Sz) for spin ``spin`` in the basis m = S, S-1, ..., -S."""
    two_s = int(round(2 * spin))
    if abs(two_s - 2 * spin) > 1e-12 or two_s < 1:
        raise ValueError(f"invalid spin {spin}")
    m = spin - np.arange(two_s + 1)
    sz = np.diag(m).astype(complex)
    # <m+1|S+|m> = sqrt(S(S+1) - m(m+1)); index of m+1 is one above index of m
    raise_ = np.zeros((two_s + 1, two_s + 1), dtype=complex)
    for k in range(1, two_s + 1):
        raise_[k - 1, k] = np.sqrt(spin * (spin + 1) - m[k] * (m[k] + 1))
    sx = (raise_ + raise_.conj().T) / 2
    sy = (raise_ - raise_.conj().T) / 2j
    return sx, sy, sz


def spin_eigvec(spin: float, axis: str, m: float) -> np.ndarray:
    """Eigenvector of S_axis with eigenvalue ``m`` in the S_z basis.

    Phase convention: obtained by rotating |S_z = m> with exp(-i pi/2 S_y)
    (axis x) or exp(+i pi/2 S_x) (axis y), which fixes every phase
    deterministically.
    """
    sx, sy, sz = spin_matrices(spin)
    idx = int(round(spin - m))
    ket = basis_ket(sx.shape[0], idx)
    if axis == "z":
        return ket
    if axis == "x":
        return scipy.linalg.expm(-0.5j * np.pi * sy) @ ket
    if axis == "y":
        return scipy.linalg.expm(0.5j * np.pi * sx) @ ket
    raise ValueError(f"unknown axis {axis!r}")


# --- state construction and evolution ------------------------------------------

def product_state(kets: Sequence[np.ndarray], cap: int = DEFAULT_CAP) -> PureState:
    """Tensor product of normalized local kets; dims are taken from the kets."""
    vecs = [np.asarray(k, dtype=complex).reshape(-1) for k in kets]
    for v in vecs:
        if abs(np.linalg.norm(v) - 1) > NORM_TOL:
            raise ValueError("product_state expects normalized kets")
    spec = SiteSpec(tuple(v.size for v in vecs), cap)
    return PureState(spec, kron(*vecs).reshape(-1))


def _contract(tensor: np.ndarray, sites: tuple[int, ...], matrix: np.ndarray, in_dims, out_dims) -> np.ndarray:
    k = len(sites)
    op = matrix.reshape(tuple(out_dims) + tuple(in_dims))
    out = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), list(sites)))
    return np.moveaxis(out, list(range(k)), list(sites))


def _check_sites(state: PureState, sites: Sequence[int]) -> None:
    for s in sites:
        if not 0 <= s < state.n_sites:
            raise ValueError(f"site {s} out of range for {state.n_sites} sites")


def apply(state: PureState, op: LocalOperator, renormalize: bool = False) -> PureState:
    """Apply ``op`` to its sites. Non-unitary operators need ``renormalize=True``."""
    _check_sites(state, op.sites)
    in_dims = [state.dims[s] for s in op.sites]
    if int(np.prod(in_dims)) != op.dim:
        raise ValueError(f"operator of dim {op.dim} does not match sites with dims {in_dims}")
    if not renormalize and not op.is_unitary():
        raise ValueError("non-unitary operator applied without renormalize=True")
    out = _contract(state.tensor(), op.sites, op.matrix, in_dims, in_dims).reshape(-1)
    if renormalize:
        return PureState.from_vector(state.dims, out, state.spec.cap)
    return PureState(state.spec, out)


def apply_all(state: PureState, ops: Sequence[LocalOperator]) -> PureState:
    for op in ops:
        state = apply(state, op)
    return state


def apply_map(state: PureState, site: int, matrix: np.ndarray, renormalize: bool = True) -> PureState:
    """Apply a possibly rectangular map to one site, changing its local dimension.

    ``matrix`` has shape (new_dim, old_dim); ``new_dim == 1`` removes the site.
    """
    _check_sites(state, [site])
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape[1] != state.dims[site]:
        raise ValueError("map input dimension does not match site")
    out = _contract(state.tensor(), (site,), matrix, [state.dims[site]], [matrix.shape[0]])
    dims = list(state.dims)
    if matrix.shape[0] == 1:
        out = np.squeeze(out, axis=site)
        del dims[site]
    else:
        dims[site] = matrix.shape[0]
    if renormalize:
        return PureState.from_vector(dims, out, state.spec.cap)
    return PureState(SiteSpec(tuple(dims), state.spec.cap), out)


def _pick(probs: np.ndarray, policy: OutcomePolicy) -> int:
    if isinstance(policy, np.random.Generator):
        p = np.clip(probs, 0, None)
        return int(policy.choice(len(p), p=p / p.sum()))
    k = int(policy)
    if not 0 <= k < len(probs):
        raise ValueError(f"forced outcome {k} outside basis of size {len(probs)}")
    if probs[k] < ZERO_PROB:
        raise ZeroProbabilityError(f"forced outcome {k} has probability {probs[k]:.3e}")
    return k


def measure(
    state: PureState,
    site: int | Sequence[int],
    basis: Sequence[np.ndarray],
    policy: OutcomePolicy,
    label: str = "",
    discard: bool = True,
) -> tuple[MeasurementRecord, PureState]:
    """Projective measurement of one site (or a group of sites) in ``basis``.

    ``basis`` is a list of orthonormal kets; the outcome index is the
    position in that list. With ``discard`` the measured sites are removed
    from the returned state, otherwise they are left in the basis ket.
    """
    sites = (site,) if np.isscalar(site) else tuple(site)
    _check_sites(state, sites)
    local_dims = [state.dims[s] for s in sites]
    dim = int(np.prod(local_dims))
    bmat = np.column_stack([np.asarray(b, dtype=complex).reshape(-1) for b in basis])
    if bmat.shape[0] != dim:
        raise ValueError(f"basis kets have dimension {bmat.shape[0]}, sites have {dim}")
    if not np.allclose(bmat.conj().T @ bmat, np.eye(bmat.shape[1]), atol=1e-12):
        raise ValueError("measurement basis is not orthonormal")
    if bmat.shape[1] != dim:
        raise ValueError("measurement basis is incomplete")

    # move measured sites to the front: psi[j, rest]
    rest = [i for i in range(state.n_sites) if i not in sites]
    psi = np.transpose(state.tensor(), list(sites) + rest).reshape(dim, -1)
    proj = bmat.conj().T @ psi
    probs = np.einsum("ij,ij->i", proj.conj(), proj).real
    k = _pick(probs, policy)
    rest_dims = [state.dims[i] for i in rest]
    residual = proj[k] / np.sqrt(probs[k])
    record = MeasurementRecord(sites[0] if len(sites) == 1 else sites, label, k, float(probs[k]))
    if discard:
        if not rest_dims:
            raise ValueError("cannot discard every site of a state")
        return record, PureState(SiteSpec(tuple(rest_dims), state.spec.cap), residual)
    full = np.tensordot(bmat[:, k].reshape(local_dims), residual.reshape(rest_dims), axes=0)
    inverse = np.argsort(list(sites) + rest)
    full = np.transpose(full, inverse)
    return record, PureState(state.spec, full.reshape(-1))


def outcome_probabilities(state: PureState, site: int | Sequence[int], basis: Sequence[np.ndarray]) -> np.ndarray:
    sites = (site,) if np.isscalar(site) else tuple(site)
    dim = int(np.prod([state.dims[s] for s in sites]))
    bmat = np.column_stack([np.asarray(b, dtype=complex).reshape(-1) for b in basis])
    rest = [i for i in range(state.n_sites) if i not in sites]
    psi = np.transpose(state.tensor(), list(sites) + rest).reshape(dim, -1)
    proj = bmat.conj().T @ psi
    return np.einsum("ij,ij->i", proj.conj(), proj).real


def check_completeness(kraus: Sequence[np.ndarray], tol: float = 1e-10) -> float:
    """Return max |sum F^dag F - 1|; raise if it exceeds ``tol``."""
    total = sum(np.asarray(f).conj().T @ np.asarray(f) for f in kraus)
    dev = float(np.max(np.abs(total - np.eye(total.shape[0]))))
    if dev > tol:
        raise ValueError(f"Kraus operators violate completeness (deviation {dev:.3e})")
    return dev


def apply_povm(
    state: PureState,
    site: int,
    kraus: Sequence[np.ndarray | LocalOperator],
    policy: OutcomePolicy,
    label: str = "",
) -> tuple[MeasurementRecord, PureState]:
    """Generalized measurement: outcome a with probability ||F_a psi||^2."""
    mats = [k.matrix if isinstance(k, LocalOperator) else np.asarray(k, dtype=complex) for k in kraus]
    check_completeness(mats)
    _check_sites(state, [site])
    d = state.dims[site]
    branches = [_contract(state.tensor(), (site,), f, [d], [d]).reshape(-1) for f in mats]
    probs = np.array([np.vdot(b, b).real for b in branches])
    k = _pick(probs, policy)
    record = MeasurementRecord(site, label, k, float(probs[k]))
    return record, PureState(state.spec, branches[k] / np.sqrt(probs[k]))


def fidelity_up_to_phase(a: PureState, b: PureState) -> float:
    """|<a|b>|, insensitive to global phase."""
    if a.dims != b.dims:
        raise ValueError(f"state dims differ: {a.dims} vs {b.dims}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


def expectation(state: PureState, op: LocalOperator) -> complex:
    in_dims = [state.dims[s] for s in op.sites]
    out = _contract(state.tensor(), op.sites, op.matrix, in_dims, in_dims).reshape(-1)
    return complex(np.vdot(state.amplitudes, out))


def embed(op: LocalOperator, dims: Sequence[int]) -> np.ndarray:
    """Full matrix of ``op`` on the space with local dimensions ``dims``."""
    dims = tuple(dims)
    total = int(np.prod(dims))
    eye = np.eye(total, dtype=complex).reshape(dims + (total,))
    in_dims = [dims[s] for s in op.sites]
    out = _contract(eye, op.sites, op.matrix, in_dims, in_dims)
    return out.reshape(total, total)


def build_hamiltonian(terms: Sequence[LocalOperator], dims: Sequence[int], cap: int = SPECTRUM_CAP) -> LocalOperator:
    """Sum of local terms as one operator over all sites."""
    dims = tuple(dims)
    total = int(np.prod(dims))
    if total > cap:
        raise CapExceededError(f"Hamiltonian dimension {total} exceeds cap {cap}")
    h = np.zeros((total, total), dtype=complex)
    for term in terms:
        h += embed(term, dims)
    return LocalOperator(tuple(range(len(dims))), h)


def exact_spectrum(h: LocalOperator, cap: int = SPECTRUM_CAP) -> np.ndarray:
    """Sorted real eigenvalues of a Hermitian operator."""
    if h.dim > cap:
        raise CapExceededError(f"operator dimension {h.dim} exceeds spectrum cap {cap}")
    if not h.is_hermitian():
        raise ValueError("exact_spectrum requires a Hermitian operator")
    herm = (h.matrix + h.matrix.conj().T) / 2
    return np.linalg.eigvalsh(herm)


def evolve(state: PureState, h: LocalOperator, t: float) -> PureState:
    """exp(-i h t) applied to ``state`` (``h`` acts on all sites)."""
    if h.sites != tuple(range(state.n_sites)):
        raise ValueError("evolve expects a Hamiltonian over every site in order")
    if not h.is_hermitian():
        raise ValueError("evolve requires a Hermitian generator")
    w, v = np.linalg.eigh((h.matrix + h.matrix.conj().T) / 2)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    return PureState(state.spec, u @ state.amplitudes)


def random_state(dims: Sequence[int], rng: np.random.Generator) -> PureState:
    size = int(np.prod(dims))
    vec = rng.normal(size=size) + 1j * rng.normal(size=size)
    return PureState.from_vector(dims, vec)


def phase_aligned_distance(u: np.ndarray, v: np.ndarray) -> float:
    """min over phi of max|u - e^{i phi} v| for equal-shape arrays."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    overlap = np.vdot(v.reshape(-1), u.reshape(-1))
    phase = overlap / abs(overlap) if abs(overlap) > 1e-300 else 1.0
    return float(np.max(np.abs(u - phase * v)))


def equal_up_to_phase(u: np.ndarray, v: np.ndarray, tol: float = 1e-10) -> bool:
    return phase_aligned_distance(u, v) <= tol
