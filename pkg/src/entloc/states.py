"""State families and seeded Haar sampling within a family.

Qubit labels follow ket order: in ``|q0 q1 q2>`` the leftmost qubit is
index 0. Coefficient placement for the three-qubit families:

============  ===========================================
family        amplitude placement (ket -> coefficient)
============  ===========================================
gGHZ          |0..0> c0, |1..1> c1
gW            |001> c1, |010> c2, |100> c3
GHZ class     |k> c_k for k = 0..7 (computational order)
W class       |000> c0, |100> c1, |010> c2, |001> c3
============  ===========================================

In the gW family, qubit index 2 carries the ``c1`` excitation; with that
qubit assisting, the sharp-measurement value on pair (0, 1) is ``|c2 c3|``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import NormalizationError

NORM_TOL = 1e-12


class Family(str, enum.Enum):
    GGHZ_N = "gghz"
    GW = "gw"
    GHZ_CLASS = "ghz_class"
    W_CLASS = "w_class"
    DICKE = "dicke"


def _coeffs(values, size: int | None = None) -> np.ndarray:
    c = np.asarray(values, dtype=complex).ravel()
    if size is not None and c.size != size:
        raise ValueError(f"expected {size} coefficients, got {c.size}")
    norm = float(np.sum(np.abs(c) ** 2))
    if abs(norm - 1.0) > NORM_TOL:
        raise NormalizationError(f"coefficients have squared norm {norm!r}, expected 1")
    return c


def make_gghz(n: int, c0: complex, c1: complex) -> np.ndarray:
    if n < 2:
        raise ValueError("gGHZ needs at least two qubits")
    c0, c1 = _coeffs([c0, c1])
    out = np.zeros(2**n, dtype=complex)
    out[0], out[-1] = c0, c1
    return out


def make_gw(c1: complex, c2: complex, c3: complex) -> np.ndarray:
    c = _coeffs([c1, c2, c3])
    out = np.zeros(8, dtype=complex)
    out[[0b001, 0b010, 0b100]] = c
    return out


def gw_angles_to_coeffs(beta1: float, beta2: float) -> tuple[float, float, float]:
    return (
        math.cos(beta2 / 2),
        math.sin(beta2 / 2) * math.cos(beta1 / 2),
        math.sin(beta2 / 2) * math.sin(beta1 / 2),
    )


def make_gw_angles(beta1: float, beta2: float) -> np.ndarray:
    return make_gw(*gw_angles_to_coeffs(beta1, beta2))


def make_ghz_class(coeffs) -> np.ndarray:
    return _coeffs(coeffs, 8).copy()


def make_w_class(coeffs) -> np.ndarray:
    c = _coeffs(coeffs, 4)
    out = np.zeros(8, dtype=complex)
    out[[0b000, 0b100, 0b010, 0b001]] = c
    return out


def make_dicke(n: int, n1: int) -> np.ndarray:
    if not 0 <= n1 <= n:
        raise ValueError(f"Dicke excitation number {n1} outside [0, {n}]")
    out = np.zeros(2**n, dtype=complex)
    idx = [sum(1 << (n - 1 - q) for q in ones) for ones in combinations(range(n), n1)]
    out[idx] = 1.0 / math.sqrt(math.comb(n, n1))
    return out


def ghz_state(n: int = 3) -> np.ndarray:
    return make_gghz(n, 1 / math.sqrt(2), 1 / math.sqrt(2))


def w_state() -> np.ndarray:
    return make_dicke(3, 1)


_DIMENSIONS = {Family.GW: 3, Family.GHZ_CLASS: 8, Family.W_CLASS: 4, Family.GGHZ_N: 2}


@dataclass(frozen=True)
class StateFamily:
    """A family tag plus the parameters that fix one member."""

    tag: Family
    coeffs: tuple[complex, ...] = ()
    n: int = 3
    n1: int = 0

    def state(self) -> np.ndarray:
        if self.tag is Family.GGHZ_N:
            return make_gghz(self.n, *self.coeffs)
        if self.tag is Family.GW:
            return make_gw(*self.coeffs)
        if self.tag is Family.GHZ_CLASS:
            return make_ghz_class(self.coeffs)
        if self.tag is Family.W_CLASS:
            return make_w_class(self.coeffs)
        return make_dicke(self.n, self.n1)

    def to_dict(self) -> dict:
        out = {"family": self.tag.value}
        if self.coeffs:
            out["coeffs"] = [[c.real, c.imag] for c in self.coeffs]
        if self.tag in (Family.GGHZ_N, Family.DICKE):
            out["n"] = self.n
        if self.tag is Family.DICKE:
            out["n1"] = self.n1
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "StateFamily":
        tag = Family(d["family"])
        raw = d.get("coeffs", [])
        coeffs = tuple(complex(*c) if isinstance(c, (list, tuple)) else complex(c) for c in raw)
        if tag is Family.GW and not coeffs and "beta1" in d:
            coeffs = tuple(complex(c) for c in gw_angles_to_coeffs(d["beta1"], d["beta2"]))
        return cls(tag, coeffs, int(d.get("n", 3)), int(d.get("n1", 0)))


def sample_haar(family: Family | str, rng: np.random.Generator | int) -> StateFamily:
    """Draw a family member with coefficients uniform on the complex unit sphere."""
    family = Family(family)
    if family not in _DIMENSIONS:
        raise ValueError(f"Haar sampling is not defined for {family.value}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    dim = _DIMENSIONS[family]
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    z /= np.linalg.norm(z)
    return StateFamily(family, tuple(complex(c) for c in z))
