"""Result rows and their CSV/JSON serialization.

Column order is fixed per experiment. Every row ends with ``seed``,
``schema_version``, ``exact`` and ``wall_time_ms``; only the last column
may differ between two runs of the same config.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .config import SCHEMA_VERSION, ExperimentKind

COLUMNS: dict[ExperimentKind, tuple[str, ...]] = {
    ExperimentKind.TABLE1: (
        "N", "eta", "rounds", "e1_seq", "eR_seq", "engine", "branch_count", "dedup_count", "long_running",
    ),
    ExperimentKind.F_R_CURVE: ("r", "eta", "delta", "f_r"),
    ExperimentKind.DELTA_SWEEP: ("family", "param", "r", "eta", "reference", "delta", "delta_scaled"),
    ExperimentKind.ROUNDS_VS_GGM: ("ggm", "c0_gghz", "r_gghz", "c1_gw", "c2_gw", "c3_gw", "r_gw"),
    ExperimentKind.CLASS_FRACTION: ("family", "r", "fraction", "count", "samples"),
    ExperimentKind.FIDELITY_SWEEP: (
        "kind", "family", "eta", "rounds", "branch", "history", "probability", "fidelity",
        "lambda1_plus", "threshold", "count", "fraction", "rest_min", "rest_max",
    ),
    ExperimentKind.SLE_CURVE: ("family", "N", "N1", "r", "eta", "value", "reference", "directions"),
    ExperimentKind.CUSTOM: ("family", "N", "N1", "r", "eta", "value", "reference", "directions"),
}
TRAILER = ("seed", "schema_version", "exact", "wall_time_ms")
SORT_KEYS: dict[ExperimentKind, tuple[str, ...]] = {
    ExperimentKind.TABLE1: ("N",),
    ExperimentKind.F_R_CURVE: ("r", "eta"),
    ExperimentKind.DELTA_SWEEP: ("family", "r", "param"),
    ExperimentKind.ROUNDS_VS_GGM: ("ggm",),
    ExperimentKind.CLASS_FRACTION: ("family", "r"),
    ExperimentKind.FIDELITY_SWEEP: ("kind", "family", "rounds", "eta", "branch"),
    ExperimentKind.SLE_CURVE: ("family", "N", "N1", "r"),
    ExperimentKind.CUSTOM: ("family", "N", "N1", "r"),
}


@dataclass(frozen=True)
class ResultRow:
    experiment: ExperimentKind
    values: dict
    seed: int | None
    exact: bool = True
    wall_time_ms: float = 0.0
    schema_version: int = field(default=SCHEMA_VERSION)

    def record(self) -> dict:
        cols = COLUMNS[self.experiment]
        extra = set(self.values) - set(cols)
        if extra:
            raise KeyError(f"columns {sorted(extra)} not declared for {self.experiment.value}")
        out = {c: self.values.get(c) for c in cols}
        out.update(seed=self.seed, schema_version=self.schema_version, exact=self.exact, wall_time_ms=self.wall_time_ms)
        return out

    def sort_key(self) -> tuple:
        return tuple(_sortable(self.values.get(k)) for k in SORT_KEYS[self.experiment])


def _sortable(v):
    # None sorts first; mixed types never meet within one column
    return (v is not None, v if v is not None else 0)


def sort_rows(rows: list[ResultRow]) -> list[ResultRow]:
    return sorted(rows, key=ResultRow.sort_key)


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.9g}"
    return str(v)


def _json_value(v):
    if isinstance(v, float) and math.isfinite(v):
        return float(f"{v:.9g}")
    if isinstance(v, float):
        return None
    return v


def rows_to_csv(rows: list[ResultRow]) -> str:
    if not rows:
        return ""
    header = list(COLUMNS[rows[0].experiment]) + list(TRAILER)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        rec = row.record()
        writer.writerow([format_value(rec[c]) for c in header])
    return buf.getvalue()


def rows_to_json(rows: list[ResultRow]) -> str:
    data = [{k: _json_value(v) for k, v in row.record().items()} for row in rows]
    return json.dumps(data, indent=1) + "\n"


def strip_column(text: str, column: str = "wall_time_ms") -> str:
    """Drop one CSV column, for comparisons that must ignore timing."""
    lines = list(csv.reader(io.StringIO(text)))
    if not lines:
        return text
    k = lines[0].index(column)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for line in lines:
        writer.writerow(line[:k] + line[k + 1 :])
    return buf.getvalue()


def write_rows(rows: list[ResultRow], out_dir: str | Path, stem: str, fmt: str = "csv") -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}.{fmt}"
    path.write_text(rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows))
    return path
