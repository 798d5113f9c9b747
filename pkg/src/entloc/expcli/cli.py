"""Command-line entry point.

Exit codes: 0 on success, 2 for configuration or usage errors, 3 when a run
would exceed its memory budget.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .. import localize as L
from ..errors import BudgetExceededError, ConfigError, EntlocError, InstanceTooLargeError
from .config import ExperimentConfig, ExperimentKind, load_config, parse_grid, parse_range, resolve_threads
from .experiments import resolve_family, run_experiment
from .output import ResultRow, sort_rows, write_rows
from .plots import plot_rows

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("output")
    g.add_argument("--seed", type=int, default=None, help="RNG seed (required for sampling experiments)")
    g.add_argument("--threads", type=int, default=None, help="worker processes (ENTLOC_THREADS overrides)")
    g.add_argument("--out", default=None, help="output directory")
    g.add_argument("--format", choices=("csv", "json"), default=None)
    g.add_argument("--svg", action="store_true", help="also render an SVG chart")
    g.add_argument("--name", default=None, help="output file stem")
    return p


def _family_args() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("state")
    g.add_argument("--family", default="ghz", help="ghz, w, gghz, gw, dicke, ghz_class, w_class")
    g.add_argument("--n", type=int, default=3)
    g.add_argument("--n1", type=int, default=None)
    g.add_argument("--c0", type=float, default=None, help="gGHZ c0; c1 = sqrt(1 - c0^2)")
    g.add_argument("--coeffs", default=None, help="comma-separated real coefficients")
    g.add_argument("--beta1", type=float, default=None)
    g.add_argument("--beta2", type=float, default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    common, family = _common(), _family_args()
    parser = argparse.ArgumentParser(prog="entloc", description="Localizable entanglement with unsharp measurements.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def add(name, help_text, *parents):
        return sub.add_parser(name, help=help_text, parents=[common, *parents])

    for name, text in (("le", "single-round localizable entanglement"), ("sle", "sequentially optimized LE"), ("gle", "globally optimized LE")):
        p = add(name, text, family)
        p.add_argument("--eta", type=float, default=0.8)
        p.add_argument("--space", choices=[k.value for k in L.SpaceKind], default=None)
        if name != "le":
            p.add_argument("--rounds", type=int, default=6 if name == "sle" else 2)
        if name == "sle":
            p.add_argument("--pattern", default=None, help="directions per round, e.g. 'x,y,x,y'")

    p = add("fidelity", "Bell fidelities of the post-measurement ensemble", family)
    p.add_argument("--eta", type=float, default=0.8)
    p.add_argument("--rounds", type=int, default=6)
    p.add_argument("--pattern", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--weighted", action="store_true", help="weight fractions by probability, not branch count")
    p.add_argument("--eta-grid", default=None)

    p = add("table1", "SLE for N-qubit GHZ states")
    p.add_argument("--eta", type=float, default=0.8)
    p.add_argument("--n", default="3..5", help="range such as 3..5")
    p.add_argument("--rounds", type=int, default=6)
    p.add_argument("--space", choices=[k.value for k in L.SpaceKind], default=None)
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--max-branches", type=int, default=None)
    p.add_argument("--max-histories", type=int, default=None)

    p = add("fig", "data behind one figure")
    p.add_argument("figure", type=int, choices=range(3, 10))
    p.add_argument("--eta", type=float, default=0.8)
    p.add_argument("--rounds", default=None, help="integer or range such as 2..6")
    p.add_argument("--eta-grid", default=None, help="start:stop:step or comma list")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--n", default=None, help="qubit-number range")

    p = add("sweep", "run a JSON config")
    p.add_argument("--config", required=True)
    return parser


def _family_spec(args) -> dict:
    spec = {"family": args.family.lower(), "n": args.n}
    if args.n1 is not None:
        spec["n1"] = args.n1
    if args.c0 is not None:
        if not 0.0 <= args.c0 <= 1.0:
            raise ConfigError("--c0 must lie in [0, 1]")
        spec["family"] = "gghz"
        spec["c0"] = args.c0
    if args.coeffs is not None:
        spec["coeffs"] = [float(v) for v in args.coeffs.split(",")]
    if args.beta1 is not None or args.beta2 is not None:
        spec.update(family="gw", beta1=args.beta1 or 0.0, beta2=args.beta2 or 0.0)
    return spec


def _pattern(text: str | None):
    if text is None:
        return None
    rows = [row.split(",") for row in text.split(";")]
    return [[t.strip() for t in row] for row in rows]


def _base(args, kind: ExperimentKind, **kw) -> ExperimentConfig:
    opts = dict(experiment=kind, seed=args.seed if args.seed is not None else 0)
    for key in ("out", "format", "name"):
        if getattr(args, key) is not None:
            opts[key] = getattr(args, key)
    opts.update(svg=args.svg, threads=resolve_threads(args.threads or 1))
    opts.update(kw)
    return ExperimentConfig(**opts)


def _figure_configs(args) -> list[ExperimentConfig]:
    fig = args.figure
    grid = parse_grid(args.eta_grid) if args.eta_grid else None
    rounds = parse_range(args.rounds) if args.rounds else None
    name = args.name or f"fig{fig}"
    common = dict(eta=args.eta, name=name)
    if fig == 3:
        rv = rounds or list(range(1, 7))
        return [_base(args, ExperimentKind.F_R_CURVE, eta_grid=grid, round_values=rv, rounds=max(rv), **common)]
    if fig == 4:
        return [_base(args, ExperimentKind.DELTA_SWEEP, rounds=max(rounds or [6]), **common)]
    if fig == 5:
        return [_base(args, ExperimentKind.ROUNDS_VS_GGM, rounds=max(rounds or [10]), **common)]
    if fig == 6:
        if args.seed is None:
            raise ConfigError("fig 6 samples random states; pass --seed")
        return [_base(args, ExperimentKind.CLASS_FRACTION, rounds=max(rounds or [6]), sample_size=args.samples, **common)]
    if fig == 7:
        grid = grid or parse_grid("0.05:1:0.05")
        return [
            _base(args, ExperimentKind.FIDELITY_SWEEP, family={"family": "ghz"}, rounds=6, eta_grid=grid, **common),
            _base(args, ExperimentKind.FIDELITY_SWEEP, family={"family": "w"}, rounds=4, eta_grid=grid, **common),
        ]
    ns = parse_range(args.n) if args.n else ([3, 4, 5] if fig == 8 else [4, 5])
    if fig == 8:
        fams = [{"family": "ghz", "n": n} for n in ns]
    else:
        fams = [{"family": "dicke", "n": n, "n1": k} for n in ns for k in range(1, n)]
    return [_base(args, ExperimentKind.SLE_CURVE, families=fams, rounds=max(rounds or [6]), **common)]


def _gle_rows(args) -> list[ResultRow]:
    label, state, n, n1 = resolve_family(_family_spec(args))
    assisting = list(range(2, n))
    try:
        value, mm = L.global_le(state, (0, 1), assisting, args.eta, args.rounds, seed=args.seed or 0)
    except InstanceTooLargeError as exc:
        raise ConfigError(str(exc)) from None
    ref = L.projective_le(state, (0, 1), assisting)
    dirs = "|".join(" ".join(d.label for d in row) for row in mm)
    values = {"family": label, "N": n, "N1": n1 if label == "dicke" else None, "r": args.rounds,
              "eta": args.eta, "value": value, "reference": ref, "directions": dirs}
    return [ResultRow(ExperimentKind.CUSTOM, values, args.seed or 0)]


def _configs(args) -> list[ExperimentConfig]:
    cmd = args.command
    if cmd == "sweep":
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        for key in ("out", "format", "name"):
            if getattr(args, key) is not None:
                setattr(cfg, key, getattr(args, key))
        cfg.svg = cfg.svg or args.svg
        cfg.threads = resolve_threads(args.threads or cfg.threads)
        cfg.validate()
        return [cfg]
    if cmd in ("le", "sle"):
        rounds = 1 if cmd == "le" else args.rounds
        pattern = _pattern(getattr(args, "pattern", None))
        return [_base(args, ExperimentKind.SLE_CURVE, family=_family_spec(args), eta=args.eta, rounds=rounds,
                      space=args.space, pattern=pattern, name=args.name or cmd)]
    if cmd == "fidelity":
        grid = parse_grid(args.eta_grid) if args.eta_grid else None
        return [_base(args, ExperimentKind.FIDELITY_SWEEP, family=_family_spec(args), eta=args.eta,
                      rounds=args.rounds, pattern=_pattern(args.pattern), threshold=args.threshold,
                      weighted=args.weighted, eta_grid=grid)]
    if cmd == "table1":
        extra = {}
        if args.max_branches is not None:
            extra["max_branches"] = args.max_branches
        if args.max_histories is not None:
            extra["max_histories"] = args.max_histories
        return [_base(args, ExperimentKind.TABLE1, eta=args.eta, n_values=parse_range(args.n), rounds=args.rounds,
                      space=args.space, dedup=not args.no_dedup, **extra)]
    return _figure_configs(args)


def _emit(rows: list[ResultRow], out: str, stem: str, fmt: str, svg: bool) -> list[Path]:
    paths = [write_rows(rows, out, stem, fmt)]
    if svg and rows:
        paths.append(plot_rows(rows, Path(out) / f"{stem}.svg"))
    return paths


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.command == "gle":
            rows = _gle_rows(args)
            out, stem, fmt, svg = args.out or ".", args.name or "gle", args.format or "csv", args.svg
        else:
            configs = _configs(args)
            rows = []
            for cfg in configs:
                rows += run_experiment(cfg)
            rows = sort_rows(rows)
            first = configs[0]
            out, stem, fmt, svg = first.out, first.stem, first.format, first.svg
        for path in _emit(rows, out, stem, fmt, svg):
            print(path)
        _summary(rows)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, EntlocError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def _summary(rows: list[ResultRow]) -> None:
    """One short human-readable line per headline result on stdout."""
    if not rows:
        return
    kind = rows[0].experiment
    if kind in (ExperimentKind.SLE_CURVE, ExperimentKind.CUSTOM):
        last = {}
        for row in rows:
            v = row.values
            last[(v["family"], v["N"], v["N1"])] = v
        for v in last.values():
            n1 = f" N1={v['N1']}" if v["N1"] is not None else ""
            print(f"{v['family']} N={v['N']}{n1} R={v['r']}: {v['value']:.6f} (sharp {v['reference']:.6f})")
    elif kind is ExperimentKind.TABLE1:
        for row in rows:
            v = row.values
            print(f"N={v['N']}: E1={v['e1_seq']:.6f} E{v['rounds']}={v['eR_seq']:.6f}")
    elif kind is ExperimentKind.FIDELITY_SWEEP:
        for row in rows:
            v = row.values
            if v["kind"] == "summary":
                print(f"{v['family']} R={v['rounds']}: {v['count']} branches above {v['threshold']} "
                      f"(fraction {v['fraction']:.4f}); rest in [{v['rest_min']}, {v['rest_max']}]")


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
