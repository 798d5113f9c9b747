"""Entanglement and fidelity functionals.

``negativity`` and ``bell_fidelity`` act on two-qubit density matrices,
``ggm`` on pure multiqubit state vectors.
"""

from __future__ import annotations

import enum
import itertools
import math
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from . import qcore
from .errors import EntlocError

BELL_PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)


class Measure(str, enum.Enum):
    NEGATIVITY = "negativity"
    GGM = "ggm"
    BELL_FIDELITY = "bell_fidelity"


def negativity(dm: np.ndarray) -> float:
    """Sum of the magnitudes of the negative eigenvalues of the partial transpose."""
    ev = qcore.hermitian_eigenvalues(qcore.partial_transpose(dm))
    return float(-np.sum(ev[ev < 0]))


def negativity_batch(dms: np.ndarray) -> np.ndarray:
    """Vectorized :func:`negativity` for a stack of (possibly unnormalized) matrices.

    Negativity is homogeneous of degree one, so feeding ``p * rho`` returns
    ``p * negativity(rho)``.
    """
    ev = np.linalg.eigvalsh(qcore.partial_transpose(dms))
    return -np.sum(np.minimum(ev, 0.0), axis=-1)


def ggm(state: np.ndarray) -> float:
    """Generalized geometric measure of a pure state.

    One minus the largest Schmidt eigenvalue over every bipartition.
    """
    n = qcore.num_qubits(state)
    if n < 2:
        raise ValueError("GGM needs at least two qubits")
    best = max(float(qcore.schmidt_spectrum(state, side)[0]) for side in bipartitions(n))
    return max(0.0, 1.0 - best)


def _ggm_of_pair(dm: np.ndarray) -> float:
    vals, vecs = qcore.jacobi_eigh(dm)
    if vals[-1] < 1.0 - 1e-8:
        raise EntlocError("GGM is defined for pure two-qubit states only")
    return ggm(vecs[:, -1])


def _euler_unitary(a: float, b: float, c: float) -> np.ndarray:
    """Rz(a) Ry(b) Rz(c) with the global phase dropped."""
    cb, sb = math.cos(b / 2), math.sin(b / 2)
    e_plus = complex(math.cos((a + c) / 2), math.sin((a + c) / 2))
    e_minus = complex(math.cos((a - c) / 2), math.sin((a - c) / 2))
    return np.array(
        [[cb / e_plus, -sb / e_minus], [sb * e_minus, cb * e_plus]],
        dtype=complex,
    )


def _overlap(params: np.ndarray, dm: np.ndarray, psi_mat: np.ndarray) -> float:
    u1 = _euler_unitary(*params[:3])
    u2 = _euler_unitary(*params[3:])
    # (U1 (x) U2)|psi> as a 2x2 coefficient matrix is U1 Psi U2^T
    phi = (u1 @ psi_mat @ u2.T).reshape(4)
    return float(np.real(phi.conj() @ dm @ phi))


def bell_fidelity(
    dm: np.ndarray,
    restarts: int = 24,
    seed: int = 0,
    xatol: float = 1e-9,
    reference: np.ndarray = BELL_PHI_PLUS,
) -> float:
    """Maximal overlap of ``dm`` with a maximally entangled state under local unitaries.

    Multi-start Nelder-Mead over three Euler angles per qubit: one start at
    the identity and ``restarts`` uniformly random starts drawn from ``seed``.
    """
    dm = np.asarray(dm, dtype=complex)
    psi_mat = np.asarray(reference, dtype=complex).reshape(2, 2)
    rng = np.random.default_rng(seed)
    starts = [np.zeros(6)] + [rng.uniform(0, 2 * np.pi, 6) for _ in range(restarts)]
    best = -np.inf
    for x0 in starts:
        res = minimize(
            lambda x: -_overlap(x, dm, psi_mat),
            x0,
            method="Nelder-Mead",
            options={"xatol": xatol, "fatol": 1e-14, "maxiter": 20000, "maxfev": 40000},
        )
        # strict '>' keeps the earliest restart on ties
        if -res.fun > best:
            best = -res.fun
    return float(best)


def entanglement_functional(tag: Measure | str) -> Callable[[np.ndarray], float]:
    try:
        tag = Measure(tag.lower() if isinstance(tag, str) else tag)
    except ValueError:
        raise EntlocError(f"unknown entanglement measure {tag!r}") from None
    return {
        Measure.NEGATIVITY: negativity,
        Measure.BELL_FIDELITY: bell_fidelity,
        Measure.GGM: _ggm_of_pair,
    }[tag]


def bipartitions(n: int):
    """Yield one side of each of the ``2**(n-1) - 1`` bipartitions of ``n`` qubits.

    Qubit ``n-1`` is always on the complementary side, so no cut repeats.
    """
    for k in range(1, n):
        for side in itertools.combinations(range(n - 1), k):
            yield list(side)
