"""Independent reference implementations used only by the tests.

Nothing here calls into the package under test except for simple value
types, so agreement is real evidence rather than self-consistency.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.linalg import sqrtm

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": (math.pi / 2, 0.0), "y": (math.pi / 2, math.pi / 2), "z": (0.0, 0.0)}


def bloch(theta, phi):
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def povm(lam, eta, theta, phi):
    n = bloch(theta, phi)
    return 0.5 * (np.eye(2) + lam * eta * (n[0] * SX + n[1] * SY + n[2] * SZ))


def kraus_sqrtm(lam, eta, theta, phi):
    """Kraus operator as the principal matrix square root of the POVM element."""
    return sqrtm(povm(lam, eta, theta, phi))


def partial_trace_loops(state, keep):
    """Two-qubit reduced density matrix by explicit summation over basis indices."""
    n = int(round(math.log2(len(state))))
    q1, q2 = keep
    rho = np.zeros((4, 4), dtype=complex)
    for i in range(2**n):
        for j in range(2**n):
            bi = [(i >> (n - 1 - q)) & 1 for q in range(n)]
            bj = [(j >> (n - 1 - q)) & 1 for q in range(n)]
            if any(bi[q] != bj[q] for q in range(n) if q not in keep):
                continue
            rho[2 * bi[q1] + bi[q2], 2 * bj[q1] + bj[q2]] += state[i] * np.conj(state[j])
    return rho


def partial_transpose_loops(rho):
    out = np.zeros_like(rho)
    for a, b, c, d in itertools.product(range(2), repeat=4):
        out[2 * a + b, 2 * c + d] = rho[2 * c + b, 2 * a + d]
    return out


def negativity_eigvalsh(rho):
    ev = np.linalg.eigvalsh(partial_transpose_loops(rho))
    return float(-ev[ev < 0].sum())


def bell_fidelity_analytic(rho):
    """Closed-form maximal singlet fraction of a two-qubit state.

    With correlation matrix ``T_ij = Tr(rho s_i x s_j)`` and singular values
    ``s1 >= s2 >= s3``, the maximum over local unitaries of the overlap with
    a Bell state is ``(1 + s1 + s2 + s3)/4`` when ``det T <= 0`` and
    ``(1 + s1 + s2 - s3)/4`` otherwise.
    """
    paulis = (SX, SY, SZ)
    t = np.array([[np.real(np.trace(rho @ np.kron(a, b))) for b in paulis] for a in paulis])
    s = np.linalg.svd(t, compute_uv=False)
    if np.linalg.det(t) <= 0:
        return 0.25 * (1 + s.sum())
    return 0.25 * (1 + s[0] + s[1] - s[2])


def ghz_pair_factor(eta, labels):
    """Per-qubit factor ``sum_lambda |<0|E|1>|`` for one assisting qubit of a GHZ state.

    For GHZ_N the pair state of every branch is an X state whose negativity
    is half the product over assisting qubits of ``|<0|E_b|1>|``, where
    ``E_b`` is the accumulated effect of qubit ``b``.
    """
    ks = [np.eye(2, dtype=complex)]
    for lab in labels:
        theta, phi = PAULI[lab]
        ops = [kraus_sqrtm(+1, eta, theta, phi), kraus_sqrtm(-1, eta, theta, phi)]
        ks = [op @ k for k in ks for op in ops]
    return float(sum(abs((k.conj().T @ k)[0, 1]) for k in ks))


def ghz_ops_greedy(n, eta, rounds):
    """Round-by-round OPS-greedy SLE of GHZ_N from the per-qubit factorization."""
    labels, values = [], []
    for r in range(rounds):
        allowed = "zxy" if r == 0 else [c for c in "zxy" if c != labels[-1]]
        best = max(allowed, key=lambda c: (ghz_pair_factor(eta, labels + [c]), -"zxy".index(c)))
        labels.append(best)
        values.append(0.5 * ghz_pair_factor(eta, labels) ** (n - 2))
    return values, labels


def single_round_brute(state, assisting_qubit, eta, theta, phi, pair=(0, 1)):
    """Average pair negativity after one measurement, via sqrtm Kraus and loop traces."""
    n = int(round(math.log2(len(state))))
    total = 0.0
    for lam in (1, -1):
        k = kraus_sqrtm(lam, eta, theta, phi)
        op = np.array([[1.0]])
        for q in range(n):
            op = np.kron(op, k if q == assisting_qubit else np.eye(2))
        child = op @ state
        total += negativity_eigvalsh(partial_trace_loops(child, pair))
    return total


def single_round_brute_two(state, first, second, l1, l2, eta=0.8, pair=(0, 1)):
    """Negativity weight of one two-round outcome on qubit 2 of a three-qubit state."""
    k = kraus_sqrtm(l2, eta, *second) @ kraus_sqrtm(l1, eta, *first)
    child = np.kron(np.eye(4), k) @ state
    return negativity_eigvalsh(partial_trace_loops(child, pair))


def haar_unitary(rng, dim=2):
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
