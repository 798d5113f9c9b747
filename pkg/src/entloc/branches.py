"""Weighted ensembles of post-measurement branches.

An :class:`Ensemble` is the exhaustive outcome tree of a sequence of
measurement rounds, stored as stacked arrays: one normalized state, one
probability and one outcome history per branch. Child order is fixed so
identical inputs give bit-identical ensembles: for each parent in order,
children run over outcome tuples with +1 before -1 and the lowest assisting
qubit varying slowest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from . import qcore
from .entanglement import Measure, entanglement_functional, negativity, negativity_batch
from .errors import QubitIndexError
from .povm import Direction, kraus_matrix

EPS_STATE = 1e-8
HASH_DECIMALS = 6
# merged states must also agree amplitude by amplitude after phase alignment;
# the overlap test alone admits distances near 1e-4, enough to move averages
MERGE_ATOL = 1e-10


@dataclass(frozen=True)
class Branch:
    probability: float
    state: np.ndarray
    outcome_history: tuple[int, ...]


@dataclass(frozen=True)
class Ensemble:
    """Branches of a measurement tree.

    ``histories[k]`` lists the outcomes of branch ``k`` round by round, and
    within a round by ascending assisting-qubit index. ``pruned_mass`` is
    the total probability of children dropped below ``EPS_PROB``.
    """

    probs: np.ndarray
    states: np.ndarray
    histories: np.ndarray
    rounds_applied: int = 0
    pruned_mass: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def singleton(cls, state: np.ndarray) -> "Ensemble":
        state = qcore.normalize(np.asarray(state, dtype=complex))
        return cls(np.ones(1), state[None, :], np.zeros((1, 0), dtype=np.int8))

    def __len__(self) -> int:
        return len(self.probs)

    def __iter__(self) -> Iterator[Branch]:
        for p, s, h in zip(self.probs, self.states, self.histories):
            yield Branch(float(p), s, tuple(int(v) for v in h))

    @property
    def num_qubits(self) -> int:
        return qcore.num_qubits(self.states)

    @property
    def total_probability(self) -> float:
        return float(np.sum(self.probs))

    def outcome_matrix(self, k: int, num_assisting: int) -> np.ndarray:
        """Outcome history of branch ``k`` as an ``N_B x R`` matrix."""
        return self.histories[k].reshape(-1, num_assisting).T.astype(int)


def _check_assisting(assisting: Sequence[int], n: int, pair: Sequence[int] | None) -> list[int]:
    assisting = [int(q) for q in assisting]
    if not assisting:
        raise QubitIndexError("no assisting qubits given")
    if len(set(assisting)) != len(assisting):
        raise QubitIndexError(f"repeated assisting qubit in {assisting}")
    for q in assisting:
        if not 0 <= q < n:
            raise QubitIndexError(f"assisting qubit {q} out of range for {n} qubits")
    if pair is not None and set(pair) & set(assisting):
        raise QubitIndexError(f"assisting qubits {assisting} overlap the target pair {tuple(pair)}")
    return assisting


def branch_children(
    states: np.ndarray, assisting: Sequence[int], etas: Sequence[float], dirs: Sequence[Direction]
) -> np.ndarray:
    """Unnormalized children of every state, shape ``(B * 2**len(assisting), 2**N)``.

    ``assisting`` must already be sorted; ``etas`` and ``dirs`` align with it.
    """
    x = states
    for q, eta, d in zip(assisting, etas, dirs):
        plus = qcore.apply_single_qubit_op(x, q, kraus_matrix(+1, eta, d))
        minus = qcore.apply_single_qubit_op(x, q, kraus_matrix(-1, eta, d))
        x = np.stack([plus, minus], axis=-2)
    return x.reshape(-1, states.shape[-1])


def measure_round(
    ens: Ensemble,
    assisting: Sequence[int],
    etas: Sequence[float],
    dirs: Sequence[Direction],
    pair: Sequence[int] | None = None,
    eps_prob: float = qcore.EPS_PROB,
) -> Ensemble:
    """Apply one round of unsharp measurements on every assisting qubit."""
    assisting = _check_assisting(assisting, ens.num_qubits, pair)
    if not len(etas) == len(dirs) == len(assisting):
        raise ValueError("etas and dirs must have one entry per assisting qubit")
    order = np.argsort(assisting, kind="stable")
    assisting = [assisting[i] for i in order]
    etas = [float(etas[i]) for i in order]
    dirs = [dirs[i] for i in order]
    nb = len(assisting)

    children = branch_children(ens.states, assisting, etas, dirs)
    weights = qcore.norm_squared(children)
    probs = np.repeat(ens.probs, 2**nb) * weights
    outcomes = np.array(
        [[1 if (k >> (nb - 1 - j)) & 1 == 0 else -1 for j in range(nb)] for k in range(2**nb)],
        dtype=np.int8,
    )
    histories = np.concatenate(
        [np.repeat(ens.histories, 2**nb, axis=0), np.tile(outcomes, (len(ens), 1))], axis=1
    )
    keep = probs > eps_prob
    pruned = float(np.sum(probs[~keep]))
    states = children[keep] / np.sqrt(weights[keep])[:, None]
    return Ensemble(
        probs[keep],
        states,
        histories[keep],
        ens.rounds_applied + 1,
        ens.pruned_mass + pruned,
    )


def _canonical_phase(states: np.ndarray) -> np.ndarray:
    mags = np.abs(states)
    # first amplitude within a hair of the maximum, robust to rounding noise
    anchor = np.argmax(mags >= mags.max(axis=1, keepdims=True) * (1 - 1e-6), axis=1)
    ref = states[np.arange(len(states)), anchor]
    return states * (np.abs(ref) / ref)[:, None]


def _aligned_close(rep: np.ndarray, other: np.ndarray, overlap: complex) -> bool:
    phase = overlap / abs(overlap)
    return float(np.max(np.abs(other * phase - rep))) <= MERGE_ATOL


def dedup(ens: Ensemble, eps_state: float = EPS_STATE) -> Ensemble:
    """Merge branches whose states agree up to a global phase.

    Merged probabilities are summed; the surviving branch keeps the position
    of the first member and the lexicographically smallest history.
    """
    if len(ens) <= 1:
        return ens
    canon = _canonical_phase(ens.states)
    keys = np.round(canon.view(np.float64), HASH_DECIMALS) + 0.0
    buckets: dict[bytes, list[int]] = {}
    groups: list[list[int]] = []
    for k in range(len(ens)):
        candidates = buckets.setdefault(keys[k].tobytes(), [])
        for g in candidates:
            rep = groups[g][0]
            ov = np.vdot(ens.states[k], ens.states[rep])
            if abs(ov) ** 2 > 1.0 - eps_state and _aligned_close(ens.states[rep], ens.states[k], ov):
                groups[g].append(k)
                break
        else:
            candidates.append(len(groups))
            groups.append([k])
    if len(groups) == len(ens):
        return ens
    reps = np.array([g[0] for g in groups])
    probs = np.array([ens.probs[g].sum() for g in groups])
    histories = np.array(
        [min(ens.histories[g].tolist()) for g in groups], dtype=np.int8
    ).reshape(len(groups), ens.histories.shape[1])
    return Ensemble(probs, ens.states[reps], histories, ens.rounds_applied, ens.pruned_mass)


def average_entanglement(
    ens: Ensemble,
    pair: Sequence[int],
    measure: Measure | str | Callable[[np.ndarray], float] = Measure.NEGATIVITY,
) -> float:
    """Probability-weighted entanglement of the reduced states on ``pair``."""
    if isinstance(measure, (str, Measure)):
        measure = entanglement_functional(measure)
    dms = qcore.reduced_density(ens.states, pair)
    if measure is negativity:
        return float(np.dot(ens.probs, negativity_batch(dms)))
    total = 0.0
    for p, dm in zip(ens.probs, dms):
        total += p * measure(dm)
    return float(total)


def unnormalized_negativity(children: np.ndarray, pair: Sequence[int]) -> float:
    """Average negativity of an outcome tree held as unnormalized children."""
    return float(np.sum(negativity_batch(qcore.reduced_density(children, pair))))
