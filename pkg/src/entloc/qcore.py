"""Dense linear algebra on N-qubit pure states.

States are plain complex numpy vectors of length ``2**N``. Qubit 0 is the
most significant bit of the amplitude index, so ``|q0 q1 ... q_{N-1}>`` maps
to index ``q0 * 2**(N-1) + ... + q_{N-1}``. Most routines also accept a stack
of states with shape ``(..., 2**N)`` and broadcast over the leading axes.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateBranchError, NotHermitianError, QubitIndexError

EPS_PROB = 1e-12
JACOBI_TOL = 1e-12
HERMITIAN_TOL = 1e-9


def num_qubits(state: np.ndarray) -> int:
    dim = np.shape(state)[-1]
    n = int(dim).bit_length() - 1
    if n < 1 or 2**n != dim:
        raise ValueError(f"state length {dim} is not a power of two >= 2")
    return n


def _check_qubit(qubit: int, n: int) -> int:
    if not 0 <= int(qubit) < n:
        raise QubitIndexError(f"qubit {qubit} out of range for {n} qubits")
    return int(qubit)


def basis_state(bits: str | Sequence[int]) -> np.ndarray:
    """Computational basis state, e.g. ``basis_state("010")``."""
    bits = [int(b) for b in bits]
    out = np.zeros(2 ** len(bits), dtype=complex)
    out[int("".join(map(str, bits)), 2)] = 1.0
    return out


def apply_single_qubit_op(state: np.ndarray, qubit: int, op: np.ndarray) -> np.ndarray:
    """Apply a 2x2 operator to one tensor factor. The result is not renormalized."""
    state = np.asarray(state, dtype=complex)
    n = num_qubits(state)
    q = _check_qubit(qubit, n)
    lead = state.shape[:-1]
    psi = state.reshape(lead + (2**q, 2, 2 ** (n - q - 1)))
    out = np.einsum("ij,...ajb->...aib", np.asarray(op, dtype=complex), psi)
    return out.reshape(state.shape)


def norm_squared(state: np.ndarray) -> float | np.ndarray:
    sq = np.sum(np.abs(state) ** 2, axis=-1)
    return float(sq) if np.ndim(sq) == 0 else sq


def normalize(state: np.ndarray, eps: float = EPS_PROB) -> np.ndarray:
    p = norm_squared(state)
    if np.any(np.asarray(p) <= eps):
        raise DegenerateBranchError(f"cannot normalize a branch with probability {np.min(p):.3g}")
    return state / np.sqrt(np.asarray(p))[..., None]


def reduced_density(state: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on the qubits in ``keep``, in the order given.

    For ``keep=(q1, q2)`` the rows and columns are ordered as ``q1 (x) q2``.
    The input need not be normalized; the trace of the result is then the
    squared norm of the state.
    """
    state = np.asarray(state, dtype=complex)
    n = num_qubits(state)
    keep = [_check_qubit(q, n) for q in keep]
    if len(set(keep)) != len(keep):
        raise QubitIndexError(f"repeated qubit in {keep}")
    lead = state.shape[:-1]
    nl = len(lead)
    psi = state.reshape(lead + (2,) * n)
    rest = [q for q in range(n) if q not in keep]
    axes = list(range(nl)) + [nl + q for q in keep] + [nl + q for q in rest]
    psi = psi.transpose(axes).reshape(lead + (2 ** len(keep), 2 ** len(rest)))
    return np.einsum("...ir,...jr->...ij", psi, psi.conj())


def partial_transpose(dm: np.ndarray) -> np.ndarray:
    """Transpose the first qubit's indices of a two-qubit density matrix."""
    dm = np.asarray(dm)
    lead = dm.shape[:-2]
    t = dm.reshape(lead + (2, 2, 2, 2))
    # indices: (a, b, a', b') -> (a', b, a, b')
    t = np.swapaxes(t, -4, -2)
    return t.reshape(lead + (4, 4))


def check_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise NotHermitianError(f"expected a square matrix, got shape {m.shape}")
    dev = np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2))), initial=0.0)
    if dev > tol:
        raise NotHermitianError(f"matrix is not Hermitian (max deviation {dev:.3g})")


def jacobi_eigh(m: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = 100):
    """Eigen-decomposition of a small Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(values, vectors)`` with values ascending and ``vectors[:, k]``
    the eigenvector of ``values[k]``. Iterates until the off-diagonal
    Frobenius norm drops below ``tol``.
    """
    a = np.array(m, dtype=complex)
    check_hermitian(a)
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = abs(a[p, q])
                if g < 1e-300:
                    continue
                phase = a[p, q] / g
                tau = (a[q, q].real - a[p, p].real) / (2.0 * g)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot = np.eye(n, dtype=complex)
                rot[p, p] = c
                rot[q, p] = -s * np.conj(phase)
                rot[p, q] = s
                rot[q, q] = c * np.conj(phase)
                a = rot.conj().T @ a @ rot
                v = v @ rot
    vals = np.real(np.diag(a))
    order = np.argsort(vals, kind="stable")
    return vals[order], v[:, order]


def hermitian_eigenvalues(m: np.ndarray) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix (Jacobi)."""
    return jacobi_eigh(m)[0]


def _side(bipartition: Iterable[int], n: int) -> tuple[list[int], list[int]]:
    side_a = sorted({_check_qubit(q, n) for q in bipartition})
    if not side_a or len(side_a) == n:
        raise QubitIndexError(f"{side_a} is not a proper nonempty subset of {n} qubits")
    side_b = [q for q in range(n) if q not in side_a]
    return side_a, side_b


def schmidt_spectrum(state: np.ndarray, bipartition: Iterable[int]) -> np.ndarray:
    """Squared Schmidt coefficients across ``bipartition : complement``, descending."""
    state = np.asarray(state, dtype=complex)
    n = num_qubits(state)
    side_a, side_b = _side(bipartition, n)
    psi = state.reshape((2,) * n).transpose(side_a + side_b)
    s = np.linalg.svd(psi.reshape(2 ** len(side_a), 2 ** len(side_b)), compute_uv=False)
    return s**2
