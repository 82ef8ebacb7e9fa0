"""Matrix-product states with bond dimension 2: cluster and AKLT tensors.

A site tensor is an array ``A[s, i, j]``: one D x D matrix per physical
level ``s``. Amplitudes are ``Tr(A[s1] ... A[sn])`` for periodic chains
and ``<L| A[s1] ... A[sn] |R>`` for open ones.

Spin-1 physical levels are ordered (S_z = +1, 0, -1).
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from mbqclab import qstate
from mbqclab.qstate import HADAMARD, PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, PureState

SQRT2 = np.sqrt(2)

CLUSTER_LEFT = np.array([1, 0], dtype=complex)
CLUSTER_RIGHT = np.array([1, 1], dtype=complex)


def cluster_tensors() -> np.ndarray:
    """A[0] = |+><0|, A[1] = |-><1|."""
    a = np.zeros((2, 2, 2), dtype=complex)
    a[0] = np.outer(qstate.PLUS, qstate.KET0)
    a[1] = np.outer(qstate.MINUS, qstate.KET1)
    return a


# columns: |x>, |y>, |z> expressed in the S_z basis (+1, 0, -1)
#   |0> = |z>, |+1> = -(|x> + i|y>)/sqrt2, |-1> = (|x> - i|y>)/sqrt2
XYZ_TO_SZ = np.array(
    [
        [-1 / SQRT2, 1j / SQRT2, 0],
        [0, 0, 1],
        [1 / SQRT2, 1j / SQRT2, 0],
    ],
    dtype=complex,
)


def aklt_tensors(basis: str = "sz") -> np.ndarray:
    """Spin-1 AKLT site tensor.

    In the (x, y, z) basis the matrices are X, Y, Z over sqrt2. The S_z
    basis version is obtained with the stated basis change and reads
    A[+1] = -|1><0|, A[0] = Z/sqrt2, A[-1] = |0><1|.
    """
    xyz = np.stack([PAULI_X, PAULI_Y, PAULI_Z]) / SQRT2
    if basis == "xyz":
        return xyz
    if basis != "sz":
        raise ValueError(f"unknown basis {basis!r}")
    # sum_a |a> A_a = sum_m |m> A_m with |a> = sum_m XYZ_TO_SZ[m, a] |m>
    return np.einsum("ma,aij->mij", XYZ_TO_SZ, xyz)


@dataclass(frozen=True, eq=False)
class MPSChain:
    """Site tensors plus boundary; ``left is None`` means periodic (trace)."""

    tensors: tuple[np.ndarray, ...]
    left: np.ndarray | None = None
    right: np.ndarray | None = None

    def __post_init__(self) -> None:
        tensors = tuple(np.asarray(t, dtype=complex) for t in self.tensors)
        for t in tensors:
            if t.ndim != 3 or t.shape[1] != t.shape[2]:
                raise ValueError(f"site tensor must have shape (d, D, D), got {t.shape}")
        if len({t.shape[1] for t in tensors}) > 1:
            raise ValueError("all bonds must share the same dimension")
        if (self.left is None) != (self.right is None):
            raise ValueError("give both boundary vectors or neither")
        object.__setattr__(self, "tensors", tensors)

    @classmethod
    def uniform(cls, tensor: np.ndarray, n: int, left=None, right=None) -> MPSChain:
        return cls(tuple([np.asarray(tensor)] * n), left, right)

    @property
    def periodic(self) -> bool:
        return self.left is None

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(t.shape[0] for t in self.tensors)


def contract(chain: MPSChain) -> np.ndarray:
    """Raw (unnormalized) amplitude vector of the chain."""
    bond = chain.tensors[0].shape[1]
    if chain.periodic:
        acc = np.eye(bond, dtype=complex)[None, :, :]  # (configs, D, D)
    else:
        acc = np.asarray(chain.left, dtype=complex)[None, None, :]  # (configs, 1, D)
    for t in chain.tensors:
        # acc[c, a, b] * t[s, b, e] -> [c, s, a, e]
        acc = np.einsum("cab,sbe->csae", acc, t)
        acc = acc.reshape(-1, acc.shape[2], acc.shape[3])
    if chain.periodic:
        return np.einsum("caa->c", acc)
    return acc[:, 0, :] @ np.asarray(chain.right, dtype=complex)


def to_dense(chain: MPSChain, cap: int = qstate.DEFAULT_CAP) -> tuple[PureState, float]:
    """Normalized dense state and the norm of the raw contraction."""
    size = int(np.prod(chain.dims))
    if size > cap:
        raise qstate.CapExceededError(f"MPS with dims {chain.dims} exceeds cap {cap}")
    raw = contract(chain)
    norm = float(np.linalg.norm(raw))
    if norm < qstate.ZERO_PROB:
        raise qstate.ZeroProbabilityError("MPS contraction vanishes")
    return PureState(qstate.SiteSpec(chain.dims, cap), raw / norm), norm


def correlation_op(tensor: np.ndarray, ket: np.ndarray) -> np.ndarray:
    """A[phi] = sum_s <phi|s> A[s]; ``ket`` need not be normalized."""
    ket = np.asarray(ket, dtype=complex)
    if ket.shape[0] != tensor.shape[0]:
        raise ValueError(f"ket of dimension {ket.shape[0]} does not match {tensor.shape[0]} levels")
    return np.einsum("s,sij->ij", ket.conj(), tensor)


def teleport_unitary(xi: float, s: int) -> np.ndarray:
    """U(xi, s) = H exp(i xi Z / 2) Z^s."""
    return HADAMARD @ np.diag([np.exp(0.5j * xi), np.exp(-0.5j * xi)]) @ np.linalg.matrix_power(PAULI_Z, s)


def blocked_matrices(normalized: bool = True) -> dict[tuple[str, str], np.ndarray]:
    """Two-site blocked cluster matrices A[ab] = A[a] A[b] with A[+-] = (A[0] +- A[1])/sqrt2.

    Raw products carry a factor 1/2; ``normalized`` rescales them to
    1, Z, X and XZ = -iY.
    """
    a = cluster_tensors()
    single = {"+": (a[0] + a[1]) / SQRT2, "-": (a[0] - a[1]) / SQRT2}
    scale = 2.0 if normalized else 1.0
    return {(p, q): scale * single[p] @ single[q] for p in "+-" for q in "+-"}


BLOCKED_EXPECTED = {
    ("+", "+"): PAULI_I,
    ("+", "-"): PAULI_Z,
    ("-", "+"): PAULI_X,
    ("-", "-"): -1j * PAULI_Y,
}


def symmetry_action_on_blocks(conjugator: np.ndarray) -> dict[tuple[str, str], tuple[tuple[str, str], int]]:
    """Where ``V A[ab] V^dag`` lands among the blocked matrices, with its sign.

    Raises if the image is not one of the four matrices up to sign.
    """
    blocks = blocked_matrices()
    out = {}
    for key, m in blocks.items():
        image = conjugator @ m @ conjugator.conj().T
        for target, t in blocks.items():
            for sign in (1, -1):
                if np.allclose(image, sign * t, atol=1e-12):
                    out[key] = (target, sign)
        if key not in out:
            raise ValueError(f"conjugated block {key} is not a signed blocked matrix")
    return out


def measured_chain_operator(tensor: np.ndarray, kets: Sequence[np.ndarray]) -> np.ndarray:
    """Product A[phi_1] A[phi_2] ... A[phi_k] in chain order."""
    out = np.eye(tensor.shape[1], dtype=complex)
    for ket in kets:
        out = out @ correlation_op(tensor, ket)
    return out
