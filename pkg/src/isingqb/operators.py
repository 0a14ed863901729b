"""Dense linear algebra on the 8-dimensional Hilbert space of three qubits.

Operators are plain ``numpy`` arrays of shape ``(8, 8)`` and dtype complex.
The basis is ``|q1 q2 q3>`` with qubit 1 the most significant bit and
``sigma_z|0> = +|0>``. Vectors that are diagonal in the (qubit 1, qubit 3)
subspace are ordered ``(q1 q3) = (00, 01, 10, 11)``.
"""

from __future__ import annotations

import numpy as np

DIM = 8
HERMITIAN_ATOL = 1e-12
UNITARY_ATOL = 1e-10

PAULI = {
    "I": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_WALSH_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


def pauli_product(i: str, j: str, k: str) -> np.ndarray:
    """Return ``sigma_i (x) sigma_j (x) sigma_k`` with labels in {I, x, y, z}."""
    mats = []
    for label in (i, j, k):
        try:
            mats.append(PAULI[label])
        except KeyError:
            raise ValueError(
                f"invalid Pauli label {label!r}; expected one of I, x, y, z"
            ) from None
    return np.kron(np.kron(mats[0], mats[1]), mats[2])


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Trace inner product ``Tr(A^dagger B)``."""
    return complex(np.vdot(a, b))


def is_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    return bool(np.max(np.abs(a - np.conj(np.swapaxes(a, -1, -2)))) <= atol)


def unitarity_residual(u: np.ndarray) -> float:
    """Max-entry norm of ``U^dagger U - 1``."""
    u = np.asarray(u)
    return float(np.max(np.abs(np.conj(u.T) @ u - np.eye(u.shape[0]))))


def is_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    return unitarity_residual(u) <= atol


def fidelity(u: np.ndarray, uf: np.ndarray) -> float:
    """Gate fidelity ``|Tr(U^dagger U_f)| / 8``, insensitive to global phase.

    Both arguments must be unitary to within ``UNITARY_ATOL``.
    """
    for name, op in (("U", u), ("Uf", uf)):
        res = unitarity_residual(op)
        if res > UNITARY_ATOL:
            raise ValueError(f"{name} is not unitary (residual {res:.3e})")
    return abs(inner(u, uf)) / u.shape[0]


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def walsh_hadamard_on_qubit3() -> np.ndarray:
    """``V3 = 1 (x) 1 (x) W``; unitary, Hermitian and an involution."""
    return np.kron(np.eye(4, dtype=complex), _WALSH_HADAMARD)


def expm_hermitian(a: np.ndarray) -> np.ndarray:
    """Return ``exp(-i A)`` for Hermitian ``A`` via eigendecomposition.

    Works on a single matrix or on a stack of shape ``(n, d, d)``.
    """
    a = np.asarray(a)
    if not is_hermitian(a):
        raise ValueError("expm_hermitian requires a Hermitian argument")
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    w, v = np.linalg.eigh(a)
    return (v * np.exp(-1j * w)[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def embed_diagonal13(d) -> np.ndarray:
    """Embed a 4-vector diagonal in the (q1 q3) subspace as an 8x8 operator.

    The result acts as the identity on qubit 2.
    """
    d = np.asarray(d, dtype=complex)
    if d.shape != (4,):
        raise ValueError("a (q1 q3) diagonal needs exactly four entries")
    diag = np.empty(DIM, dtype=complex)
    for q1 in range(2):
        for q2 in range(2):
            for q3 in range(2):
                diag[4 * q1 + 2 * q2 + q3] = d[2 * q1 + q3]
    return np.diag(diag)


def embed_qubit2_blocks(blocks: np.ndarray) -> np.ndarray:
    """Assemble an 8x8 operator from four 2x2 blocks acting on qubit 2.

    ``blocks[i]`` is the qubit-2 action when qubits (1, 3) are in the basis
    state with (q1 q3) index ``i``. The result commutes with sigma_z on
    qubits 1 and 3.
    """
    blocks = np.asarray(blocks, dtype=complex)
    out = np.zeros((DIM, DIM), dtype=complex)
    for q1 in range(2):
        for q3 in range(2):
            blk = blocks[2 * q1 + q3]
            for r in range(2):
                for c in range(2):
                    out[4 * q1 + 2 * r + q3, 4 * q1 + 2 * c + q3] = blk[r, c]
    return out


def max_abs_diff(a: np.ndarray, b: np.ndarray) -> float:
    """Max absolute entry difference, the deviation metric used by the oracles."""
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
