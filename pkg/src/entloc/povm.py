"""Unsharp two-outcome qubit measurements.

A measurement along the Bloch direction ``n`` with degree of unsharpness
``eta`` has POVM elements ``P(lam) = (I + lam * eta * n.sigma) / 2`` for
outcomes ``lam = +1, -1``. Its Kraus operator is the positive square root of
``P(lam)``, written in the eigenbasis ``|chi+>, |chi->`` of ``n.sigma``.

Multi-round plans are kept as two ``N_B x R`` matrices: the unsharpness
matrix (one ``eta`` per assisting qubit and round) and the measurement
matrix (one :class:`Direction` per entry).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import PlanShapeError

TWO_PI = 2.0 * math.pi

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


@dataclass(frozen=True, order=True)
class Direction:
    """Measurement direction in spherical angles, theta in [0, pi], phi in [0, 2pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi) or not (0.0 <= self.phi < TWO_PI):
            raise ValueError(f"direction angles out of range: theta={self.theta}, phi={self.phi}")

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "Direction":
        """Fold arbitrary real angles onto the canonical ranges (same unit vector)."""
        theta = math.fmod(theta, TWO_PI)
        if theta < 0:
            theta += TWO_PI
        if theta > math.pi:
            theta = TWO_PI - theta
            phi += math.pi
        phi = math.fmod(phi, TWO_PI)
        if phi < 0:
            phi += TWO_PI
        if phi >= TWO_PI - 1e-12:
            phi = 0.0
        theta = min(theta, math.pi)
        if theta < 1e-12 or theta > math.pi - 1e-12:
            # poles: phi carries no information
            theta, phi = (0.0 if theta < 1e-12 else math.pi), 0.0
        return cls(theta, phi)

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> "Direction":
        x, y, z = np.asarray(vec, dtype=float) / np.linalg.norm(vec)
        return cls.from_angles(math.acos(max(-1.0, min(1.0, z))), math.atan2(y, x))

    @property
    def vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    @property
    def label(self) -> str:
        for name, d in PAULI_DIRECTIONS.items():
            if abs(d.theta - self.theta) < 1e-9 and abs(d.phi - self.phi) < 1e-9:
                return name
        return f"({self.theta:.6f},{self.phi:.6f})"

    def is_orthogonal(self, other: "Direction", tol: float = 1e-9) -> bool:
        return abs(float(self.vector @ other.vector)) <= tol


X_HAT = Direction(math.pi / 2, 0.0)
Y_HAT = Direction(math.pi / 2, math.pi / 2)
Z_HAT = Direction(0.0, 0.0)
PAULI_DIRECTIONS = {"x": X_HAT, "y": Y_HAT, "z": Z_HAT}


def parse_direction(token: str | Direction) -> Direction:
    """Accept ``"x"``, ``"y"``, ``"z"`` or ``"theta,phi"``."""
    if isinstance(token, Direction):
        return token
    t = str(token).strip().lower()
    if t in PAULI_DIRECTIONS:
        return PAULI_DIRECTIONS[t]
    theta, phi = (float(v) for v in t.strip("()").split(","))
    return Direction.from_angles(theta, phi)


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if not 0.0 <= eta <= 1.0 or math.isnan(eta):
        raise ValueError(f"unsharpness must lie in [0, 1], got {eta}")
    return eta


def _check_outcome(lam: int) -> int:
    if lam not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {lam}")
    return int(lam)


def chi_states(d: Direction) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvectors ``|chi+>, |chi->`` of ``n.sigma`` with the fixed phase convention."""
    c, s = math.cos(d.theta / 2), math.sin(d.theta / 2)
    ph = complex(math.cos(d.phi), math.sin(d.phi))
    return np.array([c, ph * s]), np.array([s, -ph * c])


def povm_element(lam: int, eta: float, d: Direction) -> np.ndarray:
    lam, eta = _check_outcome(lam), _check_eta(eta)
    n = d.vector
    return 0.5 * (I2 + lam * eta * (n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z))


def kraus_matrix(lam: int, eta: float, d: Direction) -> np.ndarray:
    """The 2x2 Kraus matrix ``sqrt(P(lam, eta, d))``."""
    lam, eta = _check_outcome(lam), _check_eta(eta)
    plus, minus = chi_states(d)
    a = math.sqrt((1 + lam * eta) / 2)
    b = math.sqrt((1 - lam * eta) / 2)
    return a * np.outer(plus, plus.conj()) + b * np.outer(minus, minus.conj())


@dataclass(frozen=True)
class KrausOperator:
    matrix: np.ndarray
    outcome: int
    eta: float
    direction: Direction


def kraus_operator(lam: int, eta: float, d: Direction) -> KrausOperator:
    return KrausOperator(kraus_matrix(lam, eta, d), int(lam), float(eta), d)


def rotation_to(d: Direction) -> np.ndarray:
    """Unitary mapping ``|0>, |1>`` onto ``|chi+>, |chi->``."""
    plus, minus = chi_states(d)
    return np.column_stack([plus, minus])


@dataclass(frozen=True)
class MeasurementPlan:
    """Validated unsharpness and measurement matrices of shape ``(N_B, R)``."""

    etas: np.ndarray
    directions: tuple[tuple[Direction, ...], ...]

    @property
    def num_assisting(self) -> int:
        return self.etas.shape[0]

    @property
    def rounds(self) -> int:
        return self.etas.shape[1]

    def column(self, r: int) -> tuple[np.ndarray, tuple[Direction, ...]]:
        """Unsharpness values and directions of round ``r`` (0-based)."""
        return self.etas[:, r], tuple(row[r] for row in self.directions)


def as_measurement_matrix(mm) -> tuple[tuple[Direction, ...], ...]:
    """Coerce nested lists of tokens/Directions into a tuple-of-rows MM."""
    rows = [mm] if mm and not isinstance(mm[0], (list, tuple)) else mm
    return tuple(tuple(parse_direction(t) for t in row) for row in rows)


def validate_plan(um, mm) -> MeasurementPlan:
    etas = np.atleast_2d(np.asarray(um, dtype=float))
    dirs = as_measurement_matrix(mm)
    if np.any(np.isnan(etas)):
        raise PlanShapeError("unsharpness matrix contains NaN")
    if np.any((etas < 0) | (etas > 1)):
        raise PlanShapeError("unsharpness values must lie in [0, 1]")
    shape = (len(dirs), len(dirs[0]) if dirs else 0)
    if any(len(row) != shape[1] for row in dirs):
        raise PlanShapeError("measurement matrix rows have unequal length")
    if etas.shape != shape:
        raise PlanShapeError(f"unsharpness matrix {etas.shape} does not match measurement matrix {shape}")
    for row in dirs:
        for d in row:
            if math.isnan(d.theta) or math.isnan(d.phi):
                raise PlanShapeError("measurement matrix contains NaN")
    return MeasurementPlan(etas, dirs)


def constant_um(num_assisting: int, rounds: int, eta: float) -> np.ndarray:
    return np.full((num_assisting, rounds), _check_eta(eta))


def outcome_matrices(num_assisting: int, rounds: int) -> Iterator[np.ndarray]:
    """All ``2**(R*N_B)`` outcome matrices, +1 before -1, column-major by round."""
    for flat in itertools.product((1, -1), repeat=num_assisting * rounds):
        yield np.array(flat, dtype=int).reshape(rounds, num_assisting).T
