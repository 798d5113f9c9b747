"""Localizable entanglement of multiqubit states under repeated unsharp measurements."""

from .branches import Ensemble, average_entanglement, dedup, measure_round
from .entanglement import Measure, bell_fidelity, ggm, negativity
from .localize import (
    FULL_SPHERE,
    OPS,
    PAULI,
    SearchSpace,
    SpaceKind,
    global_le,
    projective_le,
    sequential_le,
    single_round_le,
)
from .povm import X_HAT, Y_HAT, Z_HAT, Direction, kraus_operator, povm_element
from .states import ghz_state, make_dicke, make_gghz, make_gw, w_state

__version__ = "0.1.0"
