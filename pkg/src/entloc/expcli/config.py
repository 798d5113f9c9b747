"""JSON experiment configuration.

A config is one JSON object whose ``experiment`` key picks the runner.
Unknown keys are rejected so typos fail loudly instead of silently falling
back to defaults. Example::

    {"experiment": "table1", "n_values": [3, 4, 5], "eta": 0.8, "rounds": 6}
"""

from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..errors import ConfigError
from ..localize import SpaceKind

SCHEMA_VERSION = 1


class ExperimentKind(str, enum.Enum):
    TABLE1 = "table1"
    F_R_CURVE = "f_r_curve"
    DELTA_SWEEP = "delta_sweep"
    ROUNDS_VS_GGM = "rounds_vs_ggm"
    CLASS_FRACTION = "class_fraction"
    FIDELITY_SWEEP = "fidelity_sweep"
    SLE_CURVE = "sle_curve"
    CUSTOM = "custom"


@dataclass
class ExperimentConfig:
    """Parameters shared by every runner; each runner reads the fields it needs."""

    experiment: ExperimentKind
    family: dict | None = None
    families: list = field(default_factory=list)
    n_values: list = field(default_factory=lambda: [3, 4, 5])
    eta: float = 0.8
    eta_grid: list | None = None
    rounds: int = 6
    round_values: list | None = None
    c0_grid: list | None = None
    beta1_grid: list | None = None
    ggm_grid: list | None = None
    relative_threshold: bool = False
    sample_size: int = 200
    epsilon: float = 5e-3
    seed: int | None = 0
    space: SpaceKind | None = None
    reference_space: SpaceKind | None = None
    pattern: list | None = None
    threshold: float | None = None
    weighted: bool = False
    dedup: bool = True
    max_branches: int = 2**20
    max_histories: int = 2**24
    state: list | None = None
    pair: list = field(default_factory=lambda: [0, 1])
    assisting: list | None = None
    threads: int = 1
    out: str = "."
    name: str | None = None
    format: str = "csv"
    svg: bool = False

    def __post_init__(self):
        try:
            self.experiment = ExperimentKind(self.experiment)
            if self.space is not None:
                self.space = SpaceKind(self.space)
            if self.reference_space is not None:
                self.reference_space = SpaceKind(self.reference_space)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.validate()

    def validate(self) -> None:
        if self.sample_size < 1:
            raise ConfigError("sample_size must be at least 1")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.rounds < 1:
            raise ConfigError("rounds must be at least 1")
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta}")
        for name in ("eta_grid", "round_values", "c0_grid", "beta1_grid", "ggm_grid", "n_values"):
            value = getattr(self, name)
            if value is not None and len(value) == 0:
                raise ConfigError(f"{name} must not be empty")
        if self.eta_grid is not None and any(not 0.0 <= e <= 1.0 for e in self.eta_grid):
            raise ConfigError("eta_grid values must lie in [0, 1]")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.format!r}")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.experiment is ExperimentKind.CLASS_FRACTION and self.seed is None:
            raise ConfigError("sampling experiments need an explicit seed")

    @property
    def stem(self) -> str:
        return self.name or self.experiment.value

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.value if isinstance(v, enum.Enum) else v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' key")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ExperimentConfig.from_dict(data)


def resolve_threads(requested: int) -> int:
    """``ENTLOC_THREADS`` wins over the command line when set."""
    env = os.environ.get("ENTLOC_THREADS")
    if env:
        try:
            requested = int(env)
        except ValueError:
            raise ConfigError(f"ENTLOC_THREADS must be an integer, got {env!r}") from None
    if requested < 1:
        raise ConfigError("thread count must be at least 1")
    return requested


def parse_range(text: str) -> list[int]:
    """``"3..5"`` -> ``[3, 4, 5]``; a single integer is a one-element range."""
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split(".."))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError:
        raise ConfigError(f"bad integer range {text!r}") from None


def parse_grid(text: str) -> list[float]:
    """``"start:stop:step"`` inclusive of ``stop`` up to rounding, or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + k * step, 12) for k in range(count)]
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None
