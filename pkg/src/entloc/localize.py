"""Localizable entanglement under single and repeated unsharp measurements.

The sequential driver optimizes one round at a time: round ``r`` picks the
directions (one per assisting qubit, shared by every branch) that maximize
the average negativity of the target pair over the ensemble left by rounds
``1..r-1``. The global driver instead optimizes every round jointly over
the complete outcome tree and is only offered for tiny instances.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.optimize import minimize

from . import qcore
from .branches import Ensemble, branch_children, dedup, measure_round, unnormalized_negativity, average_entanglement
from .errors import InstanceTooLargeError, PlanShapeError, QubitIndexError, UndefinedRatioError, BudgetExceededError
from .entanglement import negativity_batch
from .povm import X_HAT, Y_HAT, Z_HAT, Direction, as_measurement_matrix, kraus_matrix

PAULI_ORDER = (Z_HAT, X_HAT, Y_HAT)  # ascending (theta, phi)
TIE_TOL = 1e-10
NM_XATOL = 1e-8
CHUNK_AMPLITUDES = 2**22
GLOBAL_MAX_PARAMS = 4
EXACT_PRUNE_LIMIT = 1e-9


class SpaceKind(str, enum.Enum):
    FULL_SPHERE = "full_sphere"
    PAULI = "pauli"
    OPS = "ops"
    FIXED_PATTERN = "fixed_pattern"


@dataclass(frozen=True)
class SearchSpace:
    kind: SpaceKind = SpaceKind.FULL_SPHERE
    pattern: tuple[tuple[Direction, ...], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SpaceKind(self.kind))
        if self.kind is SpaceKind.FIXED_PATTERN:
            if self.pattern is None:
                raise PlanShapeError("FIXED_PATTERN needs a measurement matrix")
            object.__setattr__(self, "pattern", as_measurement_matrix(self.pattern))

    @classmethod
    def fixed(cls, pattern) -> "SearchSpace":
        return cls(SpaceKind.FIXED_PATTERN, pattern)


FULL_SPHERE = SearchSpace(SpaceKind.FULL_SPHERE)
PAULI = SearchSpace(SpaceKind.PAULI)
OPS = SearchSpace(SpaceKind.OPS)


@dataclass(frozen=True)
class RoundRecord:
    round: int
    optimal_dirs: tuple[Direction, ...]
    sle_value: float
    ensemble_size: int
    dedup_size: int
    pruned_mass: float

    @property
    def exact(self) -> bool:
        return self.pruned_mass <= EXACT_PRUNE_LIMIT


@dataclass(frozen=True)
class DeltaRecord:
    r: int
    delta: float


@dataclass
class RoundObjective:
    """Average pair negativity after one more round, as a function of directions."""

    ens: Ensemble
    pair: tuple[int, int]
    assisting: list[int]
    etas: np.ndarray
    evaluations: int = field(default=0, init=False)

    def __post_init__(self):
        order = np.argsort(self.assisting, kind="stable")
        self._order = order
        self._q = [self.assisting[i] for i in order]
        self._etas = [float(self.etas[i]) for i in order]
        self._weighted = self.ens.states * np.sqrt(self.ens.probs)[:, None]
        per_parent = self._weighted.shape[1] * 2 ** len(self._q)
        self._chunk = max(1, CHUNK_AMPLITUDES // per_parent)

    def __call__(self, dirs: Sequence[Direction]) -> float:
        self.evaluations += 1
        dirs = [dirs[i] for i in self._order]
        total = 0.0
        for start in range(0, len(self._weighted), self._chunk):
            block = self._weighted[start : start + self._chunk]
            total += unnormalized_negativity(branch_children(block, self._q, self._etas, dirs), self.pair)
        return total

    def from_angles(self, x: np.ndarray) -> float:
        return self(_dirs_from_params(x))


def _dirs_from_params(x: Sequence[float]) -> list[Direction]:
    return [Direction.from_angles(x[2 * k], x[2 * k + 1]) for k in range(len(x) // 2)]


def _params_from_dirs(dirs: Sequence[Direction]) -> np.ndarray:
    return np.array([a for d in dirs for a in (d.theta, d.phi)])


def _argmax(candidates: Iterator[tuple[Direction, ...]], objective: Callable) -> tuple[float, tuple]:
    """Best candidate; near-ties go to the lexicographically smallest directions."""
    best_v, best_c = -np.inf, None
    for c in candidates:
        c = tuple(c)
        v = objective(c)
        if v > best_v + TIE_TOL or (abs(v - best_v) <= TIE_TOL and c < best_c):
            best_v, best_c = max(v, best_v), c
    return best_v, best_c


def _nelder_mead(objective: Callable, x0: np.ndarray, step: float) -> tuple[float, np.ndarray]:
    f = getattr(objective, "from_angles", objective)
    simplex = [x0] + [x0 + step * np.eye(len(x0))[k] for k in range(len(x0))]
    res = minimize(
        lambda x: -f(x),
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": np.array(simplex),
            "xatol": NM_XATOL,
            "fatol": 1e-15,
            "maxiter": 4000 * len(x0),
            "maxfev": 4000 * len(x0),
        },
    )
    return -res.fun, res.x


def _sphere_grid(n_theta: int, n_phi: int) -> list[Direction]:
    thetas = np.linspace(0.0, math.pi, n_theta)
    phis = np.arange(n_phi) * (2 * math.pi / n_phi)
    grid = {Direction.from_angles(t, p) for t in thetas for p in phis}
    return sorted(grid)


def _optimize_full_sphere(objective: RoundObjective, nb: int) -> tuple[float, tuple[Direction, ...]]:
    if nb == 1:
        value, best = _argmax(((d,) for d in _sphere_grid(12, 24)), objective)
        step = math.pi / 11
    else:
        # start from the best Pauli product, then per-qubit grid sweeps
        value, best = _argmax(itertools.product(PAULI_ORDER, repeat=nb), objective)
        grid = _sphere_grid(6, 12)
        best = list(best)
        for _ in range(2):
            for b in range(nb):
                v, choice = _argmax(
                    ((*best[:b], d, *best[b + 1 :]) for d in grid), objective
                )
                if v > value + TIE_TOL:
                    value, best = v, list(choice)
        best = tuple(best)
        step = math.pi / 5
    refined, x = _nelder_mead(objective, _params_from_dirs(best), step)
    if refined > value:
        value, best = refined, tuple(_dirs_from_params(x))
    return _snap(objective, best)


def _snap(objective: RoundObjective, dirs: tuple[Direction, ...]) -> tuple[float, tuple[Direction, ...]]:
    """Prefer a degenerate optimum on a Pauli axis or a pi/12 lattice point."""
    quantum = math.pi / 12
    options = []
    for d in dirs:
        lattice = Direction.from_angles(round(d.theta / quantum) * quantum, round(d.phi / quantum) * quantum)
        options.append(sorted({d, lattice, *PAULI_ORDER}))

    def rank(c):
        # Pauli axes first, then lattice points, then raw optimizer output
        return (sum(p not in PAULI_ORDER for p in c), sum(p == q for p, q in zip(c, dirs)), c)

    candidates = {dirs}
    for b in range(len(dirs)):
        candidates.update((*dirs[:b], o, *dirs[b + 1 :]) for o in options[b])
    candidates.add(tuple(min(o, key=lambda p: (p not in PAULI_ORDER, p == d, p)) for o, d in zip(options, dirs)))
    scored = [(objective(c), c) for c in candidates]
    top = max(v for v, _ in scored)
    best = min((c for v, c in scored if v >= top - TIE_TOL), key=rank)
    return objective(best), best


def _ops_candidates(previous: Sequence[Direction] | None, nb: int):
    if previous is None:
        return itertools.product(PAULI_ORDER, repeat=nb)
    options = []
    for d in previous:
        allowed = [p for p in PAULI_ORDER if p.is_orthogonal(d)]
        if not allowed:
            raise PlanShapeError(f"previous direction {d} is not a Pauli axis")
        options.append(allowed)
    return itertools.product(*options)


def optimize_round(
    ens: Ensemble,
    pair: Sequence[int],
    assisting: Sequence[int],
    etas: Sequence[float],
    space: SearchSpace = FULL_SPHERE,
    previous: Sequence[Direction] | None = None,
    round_index: int = 0,
) -> tuple[float, tuple[Direction, ...]]:
    """Best directions for one round over ``space``; returns ``(value, dirs)``."""
    objective = RoundObjective(ens, tuple(pair), list(assisting), np.asarray(etas, dtype=float))
    return _optimize(objective, len(assisting), space, previous, round_index)


def _optimize(objective, nb: int, space: SearchSpace, previous, round_index: int):
    if space.kind is SpaceKind.FULL_SPHERE:
        return _optimize_full_sphere(objective, nb)
    if space.kind is SpaceKind.PAULI:
        return _argmax(itertools.product(PAULI_ORDER, repeat=nb), objective)
    if space.kind is SpaceKind.OPS:
        return _argmax(_ops_candidates(previous, nb), objective)
    column = tuple(row[round_index % len(row)] for row in space.pattern)
    if len(column) != nb:
        raise PlanShapeError(f"pattern has {len(column)} rows for {nb} assisting qubits")
    return objective(column), column


def _check_instance(state, pair, assisting) -> tuple[tuple[int, int], list[int]]:
    n = qcore.num_qubits(state)
    pair = tuple(int(q) for q in pair)
    assisting = [int(q) for q in assisting]
    if not assisting:
        raise QubitIndexError("no assisting qubits given")
    if len(pair) != 2 or pair[0] == pair[1]:
        raise QubitIndexError(f"target pair must be two distinct qubits, got {pair}")
    for q in (*pair, *assisting):
        if not 0 <= q < n:
            raise QubitIndexError(f"qubit {q} out of range for {n} qubits")
    if set(pair) & set(assisting) or len(set(assisting)) != len(assisting):
        raise QubitIndexError(f"assisting {assisting} must be distinct and disjoint from {pair}")
    return pair, assisting


def single_round_le(state, pair, assisting, etas, space: SearchSpace = FULL_SPHERE):
    """Localizable entanglement after one round; returns ``(value, dirs)``."""
    pair, assisting = _check_instance(state, pair, assisting)
    etas = np.broadcast_to(np.asarray(etas, dtype=float), (len(assisting),))
    return optimize_round(Ensemble.singleton(state), pair, assisting, etas, space)


def projective_le(state, pair, assisting, space: SearchSpace = FULL_SPHERE) -> float:
    """Sharp (eta = 1) single-round localizable entanglement."""
    if space.kind is SpaceKind.FIXED_PATTERN:
        space = PAULI
    return single_round_le(state, pair, assisting, 1.0, space)[0]


def _unsharpness(um, nb: int, rounds: int | None) -> np.ndarray:
    um = np.asarray(um, dtype=float)
    if um.ndim == 0:
        if rounds is None:
            raise PlanShapeError("a scalar unsharpness needs an explicit number of rounds")
        return np.full((nb, rounds), float(um))
    um = np.atleast_2d(um)
    if um.shape[0] != nb or (rounds is not None and um.shape[1] != rounds):
        raise PlanShapeError(f"unsharpness matrix {um.shape} does not fit {nb} qubits x {rounds} rounds")
    if np.any(np.isnan(um)) or np.any((um < 0) | (um > 1)):
        raise PlanShapeError("unsharpness values must lie in [0, 1]")
    return um


def iter_sequential_le(
    state,
    pair,
    assisting,
    um,
    rounds: int | None = None,
    space: SearchSpace = FULL_SPHERE,
    use_dedup: bool = True,
    max_branches: int | None = None,
) -> Iterator[tuple[RoundRecord, Ensemble]]:
    """Yield ``(record, ensemble)`` after each sequentially optimized round."""
    pair, assisting = _check_instance(state, pair, assisting)
    um = _unsharpness(um, len(assisting), rounds)
    ens = Ensemble.singleton(state)
    previous = None
    for r in range(um.shape[1]):
        if max_branches is not None and len(ens) * 2 ** len(assisting) > max_branches:
            raise BudgetExceededError(
                f"round {r + 1} would create {len(ens) * 2 ** len(assisting)} branches (limit {max_branches})"
            )
        _, dirs = optimize_round(ens, pair, assisting, um[:, r], space, previous, r)
        full = measure_round(ens, assisting, um[:, r], dirs, pair=pair)
        ens = dedup(full) if use_dedup else full
        record = RoundRecord(
            r + 1,
            dirs,
            average_entanglement(ens, pair),
            len(full),
            len(ens),
            ens.pruned_mass,
        )
        previous = dirs
        yield record, ens


def sequential_le(state, pair, assisting, um, rounds: int | None = None, space: SearchSpace = FULL_SPHERE, **kw) -> list[RoundRecord]:
    """Sequentially optimized localizable entanglement for every round up to ``rounds``."""
    return [rec for rec, _ in iter_sequential_le(state, pair, assisting, um, rounds, space, **kw)]


class EffectObjective:
    """Round objective built from per-qubit accumulated effects.

    Tracing out the assisting qubits leaves, for every outcome history, the
    unnormalized pair operator ``sum_o A_o (E_1 x ... x E_nb)^T A_o^dag``
    where ``E_b = K_b^dag K_b`` is the accumulated effect on qubit ``b``.
    Only one block of histories is held in memory at a time, so this scales
    to trees far larger than an explicit branch ensemble.
    """

    block = 2**18

    def __init__(self, state, pair, assisting):
        n = qcore.num_qubits(state)
        order = np.argsort(assisting, kind="stable")
        self._order = order
        q = [assisting[i] for i in order]
        rest = [k for k in range(n) if k not in (*pair, *q)]
        nb = len(q)
        psi = np.asarray(state, dtype=complex).reshape([2] * n).transpose([*pair, *q, *rest])
        psi = psi.reshape((4,) + (2,) * nb + (-1,))
        gram = np.tensordot(psi, psi.conj(), axes=([nb + 1], [nb + 1]))
        # axes (a, j_1..j_nb, a', j'_1..j'_nb) -> (a, a', j_1, j'_1, ...)
        perm = [0, nb + 1] + [ax for b in range(nb) for ax in (1 + b, nb + 2 + b)]
        self.gram = gram.transpose(perm).reshape((16,) + (4,) * nb)
        self.kraus = [np.eye(2, dtype=complex)[None] for _ in range(nb)]
        self.etas: list[float] = [0.0] * nb
        self.evaluations = 0

    @property
    def histories(self) -> int:
        return math.prod(len(k) for k in self.kraus)

    def set_etas(self, etas: Sequence[float]) -> None:
        self.etas = [float(etas[i]) for i in self._order]

    def _extended(self, dirs):
        out = []
        for k, eta, d in zip(self.kraus, self.etas, dirs):
            plus, minus = kraus_matrix(+1, eta, d), kraus_matrix(-1, eta, d)
            out.append(np.stack([plus @ k, minus @ k], axis=1).reshape(-1, 2, 2))
        return out

    def advance(self, dirs: Sequence[Direction]) -> None:
        self.kraus = self._extended([dirs[i] for i in self._order])

    def total(self, kraus) -> float:
        vecs = []
        for k in kraus:
            eff = k.conj().transpose(0, 2, 1) @ k
            vecs.append(eff.transpose(0, 2, 1).reshape(-1, 4))
        lead = 0
        while math.prod(len(v) for v in vecs[lead:]) > self.block:
            lead += 1
        total = 0.0
        for prefix in itertools.product(*(range(len(v)) for v in vecs[:lead])):
            x = self.gram
            for v, i in zip(vecs, prefix):
                x = np.tensordot(x, v[i], axes=([1], [0]))
            for v in vecs[lead:]:
                x = np.tensordot(x, v, axes=([1], [1]))
            rho = x.reshape(4, 4, -1).transpose(2, 0, 1)
            total += float(np.sum(negativity_batch(rho)))
        return total

    def __call__(self, dirs: Sequence[Direction]) -> float:
        self.evaluations += 1
        return self.total(self._extended([dirs[i] for i in self._order]))

    def from_angles(self, x: np.ndarray) -> float:
        return self(_dirs_from_params(x))


def iter_sequential_le_effects(
    state,
    pair,
    assisting,
    um,
    rounds: int | None = None,
    space: SearchSpace = OPS,
    max_histories: int | None = 2**24,
) -> Iterator[RoundRecord]:
    """Sequential LE evaluated through accumulated effects instead of branches.

    Gives the same values as :func:`iter_sequential_le` without keeping the
    post-measurement states; no pruning is applied, so every record is exact.
    """
    pair, assisting = _check_instance(state, pair, assisting)
    nb = len(assisting)
    um = _unsharpness(um, nb, rounds)
    objective = EffectObjective(qcore.normalize(np.asarray(state, dtype=complex)), pair, assisting)
    previous = None
    for r in range(um.shape[1]):
        size = objective.histories * 2**nb
        if max_histories is not None and size > max_histories:
            raise BudgetExceededError(f"round {r + 1} needs {size} outcome histories (limit {max_histories})")
        objective.set_etas(um[:, r])
        value, dirs = _optimize(objective, nb, space, previous, r)
        objective.advance(dirs)
        previous = dirs
        yield RoundRecord(r + 1, dirs, value, size, size, 0.0)


def tree_value(state, pair, assisting, etas: np.ndarray, mm: Sequence[Sequence[Direction]]) -> float:
    """Average pair negativity over the full outcome tree of a fixed plan."""
    order = np.argsort(assisting, kind="stable")
    q = [assisting[i] for i in order]
    x = np.asarray(state, dtype=complex)[None, :]
    for r in range(etas.shape[1]):
        x = branch_children(x, q, [etas[i, r] for i in order], [mm[i][r] for i in order])
    return unnormalized_negativity(x, pair)


def global_le(state, pair, assisting, um, rounds: int | None = None, restarts: int = 16, seed: int = 0):
    """Jointly optimized localizable entanglement; returns ``(value, mm)``.

    Seeds Nelder-Mead from the best Pauli plans and from random plans; only
    ``rounds * len(assisting) <= 4`` is accepted.
    """
    pair, assisting = _check_instance(state, pair, assisting)
    nb = len(assisting)
    um = _unsharpness(um, nb, rounds)
    R = um.shape[1]
    if R * nb > GLOBAL_MAX_PARAMS:
        raise InstanceTooLargeError(f"global optimization limited to R * N_B <= {GLOBAL_MAX_PARAMS}")

    def as_mm(x):
        dirs = _dirs_from_params(x)
        return [[dirs[b * R + r] for r in range(R)] for b in range(nb)]

    def f(x):
        return tree_value(state, pair, assisting, um, as_mm(x))

    seeds = []
    for combo in itertools.product(PAULI_ORDER, repeat=R * nb):
        x = _params_from_dirs(combo)
        seeds.append((f(x), x))
    seeds.sort(key=lambda s: -s[0])
    rng = np.random.default_rng(seed)
    starts = [x for _, x in seeds[:8]]
    for _ in range(restarts):
        theta = np.arccos(rng.uniform(-1, 1, R * nb))
        phi = rng.uniform(0, 2 * math.pi, R * nb)
        starts.append(np.column_stack([theta, phi]).ravel())
    best_v, best_x = seeds[0]
    for x0 in starts:
        v, x = _nelder_mead(f, x0, 0.3)
        if v > best_v + TIE_TOL:
            best_v, best_x = v, x
    mm = as_mm(best_x)
    return f(_params_from_dirs([d for row in mm for d in row])), mm


def ops_enumerate(nb: int, rounds: int) -> Iterator[tuple[tuple[Direction, ...], ...]]:
    """All measurement matrices built from Pauli axes, orthogonal between consecutive rounds."""
    if nb < 1 or rounds < 1:
        raise ValueError("need at least one assisting qubit and one round")

    def chains(length):
        if length == 1:
            yield from ((d,) for d in PAULI_ORDER)
            return
        for head in chains(length - 1):
            for d in PAULI_ORDER:
                if d.is_orthogonal(head[-1]):
                    yield head + (d,)

    rows = list(chains(rounds))
    yield from itertools.product(rows, repeat=nb)


def pattern_oracle(family: str, n: int = 3, rounds: int = 6, n1: int | None = None, variant: int = 0):
    """Claimed optimal measurement matrix for a family, ``(N-2) x rounds``.

    ``variant`` selects between the two published optima where two exist:
    for gGHZ, 0 gives identical x/y rows and 1 alternates the row phase;
    for the W state, 0 is ``z x z x`` and 1 is ``z x y z``.
    """
    family = family.lower()
    nb = n - 2
    if nb < 1:
        raise ValueError("need at least three qubits")

    def cycle(seq, shift=0):
        return tuple(seq[(r + shift) % len(seq)] for r in range(rounds))

    if family in ("gghz", "ghz"):
        return tuple(cycle((X_HAT, Y_HAT), b % 2 if variant else 0) for b in range(nb))
    if family in ("w", "gw"):
        if n != 3:
            raise ValueError("W-state pattern is defined for three qubits")
        return (cycle((Z_HAT, X_HAT)),) if variant == 0 else (cycle((Z_HAT, X_HAT, Y_HAT, Z_HAT)),)
    if family == "dicke":
        if n1 is None:
            raise ValueError("Dicke pattern needs the excitation number")
        balanced = (n % 2 == 0 and n1 == n // 2) or (n % 2 == 1 and n1 in ((n - 1) // 2, (n + 1) // 2))
        if balanced:
            return tuple(cycle((Z_HAT, X_HAT)) for _ in range(nb))
        rows = ((X_HAT, Y_HAT, Z_HAT), (Y_HAT, X_HAT, Z_HAT))
        return tuple(cycle(rows[b % 2]) for b in range(nb))
    raise ValueError(f"no pattern known for family {family!r}")


def reference_value(family: str, coeffs: Sequence[complex]) -> float:
    """Sharp-measurement value on pair (0, 1) with qubit 2 assisting: |c0 c1| or |c2 c3|."""
    c = [complex(v) for v in coeffs]
    if family.lower() in ("gghz", "ghz"):
        return abs(c[0] * c[1])
    if family.lower() == "gw":
        return abs(c[1] * c[2])
    raise ValueError(f"no closed form for family {family!r}")


def delta_series(family: str, coeffs: Sequence[complex], eta: float, rounds: int, space: SearchSpace = FULL_SPHERE) -> list[DeltaRecord]:
    """Relative shortfall of each round's SLE from the sharp-measurement value."""
    from .states import make_gghz, make_gw

    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    ref = reference_value(family, coeffs)
    if ref < 1e-12:
        raise UndefinedRatioError(f"sharp-measurement value is zero for {family} {tuple(coeffs)}")
    state = make_gghz(3, *coeffs) if family.lower() in ("gghz", "ghz") else make_gw(*coeffs)
    records = sequential_le(state, (0, 1), [2], eta, rounds, space)
    return [DeltaRecord(rec.round, abs(ref - rec.sle_value) / ref) for rec in records]


def f_function(deltas: Sequence[DeltaRecord], eta: float) -> list[float]:
    """``f_r(eta) = (1 - delta_r) / eta`` for each record."""
    return [(1.0 - d.delta) / eta for d in deltas]


def rounds_to_threshold(
    state,
    pair,
    assisting,
    eta: float,
    epsilon: float = 5e-3,
    r_max: int = 10,
    space: SearchSpace = FULL_SPHERE,
    reference: float | None = None,
) -> int | None:
    """Smallest ``r`` with ``reference - SLE_r <= epsilon``; ``None`` if not reached by ``r_max``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if reference is None:
        reference = projective_le(state, pair, assisting, space)
    for rec, _ in iter_sequential_le(state, pair, assisting, eta, r_max, space):
        if reference - rec.sle_value <= epsilon:
            return rec.round
    return None
