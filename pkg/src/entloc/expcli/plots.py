"""Line charts of result rows, written as SVG next to the tabular output."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .config import ExperimentKind  # noqa: E402
from .output import ResultRow  # noqa: E402

# deterministic SVG ids and no timestamp, so reruns give identical files
plt.rcParams["svg.hashsalt"] = "entloc"
plt.rcParams["svg.fonttype"] = "none"


def _series(rows, x, y, group):
    out = defaultdict(list)
    for row in rows:
        v = row.values
        if v.get(x) is None or v.get(y) is None:
            continue
        out[tuple(v.get(g) for g in group)].append((v[x], v[y]))
    return {k: sorted(pts) for k, pts in sorted(out.items(), key=lambda kv: str(kv[0]))}


def _draw(ax, series, label_fmt, style="-o"):
    for key, pts in series.items():
        xs, ys = zip(*pts)
        ax.plot(xs, ys, style, ms=3, lw=1, label=label_fmt(*key))


def plot_rows(rows: list[ResultRow], path: str | Path) -> Path:
    """Render a chart suited to the experiment of ``rows`` and save it."""
    path = Path(path)
    kind = rows[0].experiment
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    if kind is ExperimentKind.TABLE1:
        _draw(ax, _series(rows, "N", "e1_seq", ()), lambda: "E_1")
        _draw(ax, _series(rows, "N", "eR_seq", ()), lambda: f"E_{rows[0].values['rounds']}")
        ax.set(xlabel="N", ylabel="SLE")
    elif kind is ExperimentKind.F_R_CURVE:
        _draw(ax, _series(rows, "eta", "f_r", ("r",)), lambda r: f"r={r}", "-")
        ax.set(xlabel="eta", ylabel="f_r(eta)")
    elif kind is ExperimentKind.DELTA_SWEEP:
        _draw(ax, _series(rows, "param", "delta_scaled", ("family", "r")), lambda f, r: f"{f} r={r}", "-")
        ax.set(xlabel="c0 (gGHZ) / beta1 (gW)", ylabel="Delta_r x reference")
    elif kind is ExperimentKind.ROUNDS_VS_GGM:
        _draw(ax, _series(rows, "ggm", "r_gghz", ()), lambda: "gGHZ", ":s")
        _draw(ax, _series(rows, "ggm", "r_gw", ()), lambda: "gW", ":o")
        ax.set(xlabel="GGM", ylabel="rounds")
    elif kind is ExperimentKind.CLASS_FRACTION:
        _draw(ax, _series(rows, "r", "fraction", ("family",)), lambda f: f)
        ax.set(xlabel="R", ylabel="F", ylim=(-0.02, 1.02))
    elif kind is ExperimentKind.FIDELITY_SWEEP:
        sweep = [r for r in rows if r.values.get("kind") == "eta_sweep"]
        if sweep:
            _draw(ax, _series(sweep, "eta", "fidelity", ("family", "rounds")), lambda f, r: f"{f} R={r}")
            ax.set(xlabel="eta", ylabel="fidelity of the all-(+1) branch")
        else:
            branches = [r for r in rows if r.values.get("kind") == "branch"]
            _draw(ax, _series(branches, "branch", "fidelity", ("family",)), lambda f: f, "o")
            ax.set(xlabel="branch", ylabel="Bell fidelity")
    else:
        series = _series(rows, "r", "value", ("family", "N", "N1"))
        _draw(ax, series, lambda f, n, n1: f"{f} N={n}" + (f" N1={n1}" if n1 is not None else ""))
        ax.set(xlabel="R", ylabel="SLE")
    ax.grid(alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
