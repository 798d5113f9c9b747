"""Experiment runners.

Each runner takes an :class:`ExperimentConfig` and returns result rows
sorted by a fixed key, so the output does not depend on how work was
spread over worker processes.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .. import localize as L
from ..branches import Ensemble, measure_round
from ..entanglement import bell_fidelity, ggm
from ..errors import BudgetExceededError, ConfigError, EntlocError, NormalizationError
from ..localize import SearchSpace, SpaceKind
from ..povm import as_measurement_matrix, kraus_matrix
from ..qcore import EPS_PROB, apply_single_qubit_op, norm_squared, normalize, reduced_density
from ..states import Family, StateFamily, ghz_state, make_dicke, make_gghz, make_gw, sample_haar, w_state
from .config import ExperimentConfig, ExperimentKind, resolve_threads
from .output import ResultRow, sort_rows

PAIR = (0, 1)
DEFAULT_ETA_GRID = [round(0.05 * k, 12) for k in range(1, 21)]


def _pool_map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _ms(start: float) -> float:
    return round((time.perf_counter() - start) * 1e3, 3)


def resolve_family(spec: dict | None) -> tuple[str, np.ndarray, int, int]:
    """Build ``(label, state, N, N1)`` from a family descriptor.

    Besides the :class:`StateFamily` form this accepts the shorthands
    ``{"family": "ghz", "n": N}``, ``{"family": "w"}``,
    ``{"family": "gghz", "c0": c0}`` (``c1`` completes the norm) and
    ``{"family": "dicke", "n": N, "n1": N1}``.
    """
    spec = dict(spec or {"family": "ghz"})
    tag = str(spec.get("family", "ghz")).lower()
    n = int(spec.get("n", 3))
    n1 = int(spec.get("n1", 0))
    try:
        if tag == "ghz":
            return "ghz", ghz_state(n), n, 0
        if tag == "w":
            return "w", w_state(), 3, 1
        if tag == "gghz" and "c0" in spec:
            c0 = float(spec["c0"])
            return "gghz", make_gghz(n, c0, math.sqrt(max(0.0, 1.0 - c0 * c0))), n, 0
        if tag == "dicke":
            return "dicke", make_dicke(n, n1), n, n1
        fam = StateFamily.from_dict(spec)
        return fam.tag.value, fam.state(), int(math.log2(len(fam.state()))), n1
    except (ValueError, KeyError, TypeError, NormalizationError) as exc:
        raise ConfigError(f"bad family {spec}: {exc}") from None


def _space(kind: SpaceKind | None, default: SpaceKind, pattern=None) -> SearchSpace:
    kind = kind or default
    if kind is SpaceKind.FIXED_PATTERN:
        if pattern is None:
            raise ConfigError("fixed_pattern space needs a pattern")
        return SearchSpace.fixed(pattern)
    return SearchSpace(kind)


def _labels(dirs) -> str:
    return " ".join(d.label for d in dirs)


def _sle_records(state, assisting, eta, rounds, space, cfg: ExperimentConfig):
    """SLE records plus the engine used.

    The branch ensemble is used when the full tree fits ``max_branches``;
    beyond that the memory-light effect engine runs, unless dedup was
    switched off, in which case the run is refused.
    """
    total = 2 ** (rounds * len(assisting))
    if total <= cfg.max_branches:
        recs = L.sequential_le(state, PAIR, assisting, eta, rounds, space, use_dedup=cfg.dedup)
        return recs, "ensemble"
    if not cfg.dedup:
        raise BudgetExceededError(
            f"{total} branches exceed the budget of {cfg.max_branches} with dedup disabled"
        )
    recs = list(L.iter_sequential_le_effects(state, PAIR, assisting, eta, rounds, space, cfg.max_histories))
    return recs, "effects"


def run_table1(cfg: ExperimentConfig) -> list[ResultRow]:
    rows = []
    space = _space(cfg.space, SpaceKind.OPS, cfg.pattern)
    for n in cfg.n_values:
        if not 3 <= n <= 7:
            raise ConfigError(f"table1 supports 3 <= N <= 7, got {n}")
        start = time.perf_counter()
        assisting = list(range(2, n))
        recs, engine = _sle_records(ghz_state(n), assisting, cfg.eta, cfg.rounds, space, cfg)
        values = {
            "N": n,
            "eta": cfg.eta,
            "rounds": cfg.rounds,
            "e1_seq": recs[0].sle_value,
            "eR_seq": recs[-1].sle_value,
            "engine": engine,
            "branch_count": recs[-1].ensemble_size,
            "dedup_count": recs[-1].dedup_size,
            "long_running": n >= 6,
        }
        rows.append(ResultRow(ExperimentKind.TABLE1, values, cfg.seed, all(r.exact for r in recs), _ms(start)))
    return sort_rows(rows)


def _delta_task(args):
    family, coeffs, eta, rounds, kind = args
    return L.delta_series(family, coeffs, eta, rounds, SearchSpace(kind))


def run_f_r_curve(cfg: ExperimentConfig) -> list[ResultRow]:
    etas = cfg.eta_grid or DEFAULT_ETA_GRID
    if any(e <= 0 for e in etas):
        raise ConfigError("f_r needs eta > 0")
    rvals = cfg.round_values or list(range(1, cfg.rounds + 1))
    c0 = float((cfg.family or {}).get("c0", 1 / math.sqrt(2)))
    coeffs = (c0, math.sqrt(1 - c0 * c0))
    kind = cfg.space or SpaceKind.FULL_SPHERE
    start = time.perf_counter()
    series = _pool_map(_delta_task, [("gghz", coeffs, e, max(rvals), kind) for e in etas], cfg.threads)
    rows = []
    for eta, deltas in zip(etas, series):
        f = L.f_function(deltas, eta)
        for d, fr in zip(deltas, f):
            if d.r in rvals:
                rows.append(ResultRow(ExperimentKind.F_R_CURVE, {"r": d.r, "eta": eta, "delta": d.delta, "f_r": fr}, cfg.seed))
    wall = _ms(start)
    return sort_rows([ResultRow(r.experiment, r.values, r.seed, True, wall) for r in rows])


def run_delta_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    families = cfg.families or ["gghz", "gw"]
    kind = cfg.space or SpaceKind.FULL_SPHERE
    tasks, meta = [], []
    for fam in families:
        if fam == "gghz":
            for c0 in cfg.c0_grid or [round(0.05 * k, 12) for k in range(1, 20)]:
                coeffs = (c0, math.sqrt(1 - c0 * c0))
                tasks.append(("gghz", coeffs, cfg.eta, cfg.rounds, kind))
                meta.append(("gghz", c0, abs(coeffs[0] * coeffs[1])))
        elif fam == "gw":
            for b1 in cfg.beta1_grid or [round(math.pi * k / 20, 12) for k in range(1, 20)]:
                c = (math.cos(math.pi / 4), math.sin(math.pi / 4) * math.cos(b1 / 2), math.sin(math.pi / 4) * math.sin(b1 / 2))
                tasks.append(("gw", c, cfg.eta, cfg.rounds, kind))
                meta.append(("gw", b1, abs(c[1] * c[2])))
        else:
            raise ConfigError(f"delta sweep supports gghz and gw, got {fam!r}")
    start = time.perf_counter()
    series = _pool_map(_delta_task, tasks, cfg.threads)
    wall = _ms(start)
    rows = []
    for (fam, param, ref), deltas in zip(meta, series):
        for d in deltas:
            values = {
                "family": fam, "param": param, "r": d.r, "eta": cfg.eta,
                "reference": ref, "delta": d.delta, "delta_scaled": d.delta * ref,
            }
            rows.append(ResultRow(ExperimentKind.DELTA_SWEEP, values, cfg.seed, True, wall))
    return sort_rows(rows)


def matched_pair(g: float) -> tuple[tuple[float, float], tuple[float, float, float] | None]:
    """gGHZ and gW coefficients whose GGM equals ``g``.

    gGHZ takes ``c0 >= c1`` with ``c1**2 = g``; gW takes ``c2 = c3`` with
    ``c2**2 = g``, which exists only for ``g <= 1/3``.
    """
    if not 0.0 <= g <= 0.5:
        raise ConfigError(f"GGM target {g} outside [0, 1/2]")
    gghz = (math.sqrt(1 - g), math.sqrt(g))
    gw = None
    if g <= 1 / 3 + 1e-12:
        g = min(g, 1 / 3)
        gw = (math.sqrt(max(0.0, 1 - 2 * g)), math.sqrt(g), math.sqrt(g))
    return gghz, gw


def _rounds_task(args):
    kind, coeffs, eta, eps, r_max, relative, space = args
    if kind == "gghz":
        state, ref = make_gghz(3, *coeffs), abs(coeffs[0] * coeffs[1])
    else:
        state, ref = make_gw(*coeffs), abs(coeffs[1] * coeffs[2])
    if ref < 1e-12:
        return 1
    tol = eps * ref if relative else eps
    return L.rounds_to_threshold(state, PAIR, [2], eta, tol, r_max, SearchSpace(space), reference=ref)


def run_rounds_vs_ggm(cfg: ExperimentConfig) -> list[ResultRow]:
    grid = cfg.ggm_grid or [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 1 / 3, 0.4, 0.5]
    kind = cfg.space or SpaceKind.FULL_SPHERE
    tasks, pairs = [], []
    for g in grid:
        gghz, gw = matched_pair(g)
        checks = [(make_gghz(3, *gghz), gghz)] + ([(make_gw(*gw), gw)] if gw else [])
        for state, coeffs in checks:
            if abs(ggm(state) - g) > 1e-6:
                raise EntlocError(f"GGM match failed for target {g}: coefficients {coeffs} give {ggm(state)}")
        pairs.append((g, gghz, gw))
        tasks.append(("gghz", gghz, cfg.eta, cfg.epsilon, cfg.rounds, cfg.relative_threshold, kind))
        if gw:
            tasks.append(("gw", gw, cfg.eta, cfg.epsilon, cfg.rounds, cfg.relative_threshold, kind))
    start = time.perf_counter()
    results = iter(_pool_map(_rounds_task, tasks, cfg.threads))
    wall = _ms(start)
    rows = []
    for g, gghz, gw in pairs:
        r_gghz = next(results)
        r_gw = next(results) if gw else None
        values = {
            "ggm": g, "c0_gghz": gghz[0], "r_gghz": r_gghz,
            "c1_gw": gw[0] if gw else None, "c2_gw": gw[1] if gw else None, "c3_gw": gw[2] if gw else None,
            "r_gw": r_gw,
        }
        rows.append(ResultRow(ExperimentKind.ROUNDS_VS_GGM, values, cfg.seed, True, wall))
    return sort_rows(rows)


def _class_task(args):
    family, seed_seq, eta, rounds, space, ref_space = args
    state = sample_haar(family, np.random.default_rng(seed_seq)).state()
    ref = L.projective_le(state, PAIR, [2], SearchSpace(ref_space))
    recs = L.sequential_le(state, PAIR, [2], eta, rounds, SearchSpace(space))
    return [ref - rec.sle_value for rec in recs]


def run_class_fraction(cfg: ExperimentConfig) -> list[ResultRow]:
    families = cfg.families or [Family.GHZ_CLASS.value, Family.W_CLASS.value]
    space = cfg.space or SpaceKind.PAULI
    ref_space = cfg.reference_space or SpaceKind.FULL_SPHERE
    rows = []
    for index, fam in enumerate(families):
        if Family(fam) not in (Family.GHZ_CLASS, Family.W_CLASS):
            raise ConfigError(f"class fraction needs ghz_class or w_class, got {fam!r}")
        seeds = np.random.SeedSequence([cfg.seed, index]).spawn(cfg.sample_size)
        start = time.perf_counter()
        gaps = np.array(_pool_map(
            _class_task, [(fam, s, cfg.eta, cfg.rounds, space, ref_space) for s in seeds], cfg.threads
        ))
        wall = _ms(start)
        hits = gaps <= cfg.epsilon
        for r in range(cfg.rounds):
            count = int(np.sum(hits[:, r]))
            values = {"family": fam, "r": r + 1, "fraction": count / cfg.sample_size, "count": count, "samples": cfg.sample_size}
            rows.append(ResultRow(ExperimentKind.CLASS_FRACTION, values, cfg.seed, True, wall))
    return sort_rows(rows)


def default_fidelity_plan(label: str, rounds: int):
    if label in ("ghz", "gghz"):
        return L.pattern_oracle("gghz", 3, rounds)
    if label in ("w", "gw"):
        return L.pattern_oracle("w", 3, rounds, variant=1)
    raise ConfigError(f"fidelity sweep supports GHZ and W states, got {label!r}")


def branch_ensemble(state, mm, eta: float) -> Ensemble:
    """Full outcome tree of a one-qubit plan on qubit 2, without dedup."""
    ens = Ensemble.singleton(state)
    for d in mm[0]:
        ens = measure_round(ens, [2], [eta], [d], pair=PAIR)
    return ens


def _fidelity_task(dm):
    return bell_fidelity(dm)


def _history(h) -> str:
    return "".join("+" if v > 0 else "-" for v in h)


def run_fidelity_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    label, state, n, _ = resolve_family(cfg.family)
    if n != 3:
        raise ConfigError("fidelity sweep is defined for three-qubit states")
    mm = as_measurement_matrix(cfg.pattern) if cfg.pattern else default_fidelity_plan(label, cfg.rounds)
    if len(mm) != 1 or len(mm[0]) != cfg.rounds:
        raise ConfigError(f"pattern must be one row of {cfg.rounds} directions")
    threshold = cfg.threshold if cfg.threshold is not None else (0.95 if label in ("w", "gw") else 0.99)
    base = {"family": label, "rounds": cfg.rounds}
    rows = []

    start = time.perf_counter()
    ens = branch_ensemble(state, mm, cfg.eta)
    fids = np.array(_pool_map(_fidelity_task, list(reduced_density(ens.states, PAIR)), cfg.threads))
    wall = _ms(start)
    exact = ens.pruned_mass <= L.EXACT_PRUNE_LIMIT
    for k, (p, f, h) in enumerate(zip(ens.probs, fids, ens.histories)):
        values = dict(base, kind="branch", eta=cfg.eta, branch=k, history=_history(h), probability=float(p),
                      fidelity=float(f), lambda1_plus=bool(h[0] > 0), threshold=threshold)
        rows.append(ResultRow(ExperimentKind.FIDELITY_SWEEP, values, cfg.seed, exact, wall))
    above = fids > threshold
    weights = ens.probs if cfg.weighted else np.ones(len(fids))
    rest = fids[~above]
    summary = dict(
        base, kind="summary", eta=cfg.eta, threshold=threshold, count=int(np.sum(above)),
        fraction=float(np.sum(weights[above]) / np.sum(weights)),
        rest_min=float(rest.min()) if rest.size else None, rest_max=float(rest.max()) if rest.size else None,
    )
    rows.append(ResultRow(ExperimentKind.FIDELITY_SWEEP, summary, cfg.seed, exact, wall))

    if cfg.eta_grid:
        start = time.perf_counter()
        dms, probs = [], []
        for eta in cfg.eta_grid:
            psi, prob = all_plus_branch(state, mm, eta)
            probs.append(prob)
            dms.append(reduced_density(psi, PAIR) if psi is not None else None)
        fids = _pool_map(_fidelity_task, [d for d in dms if d is not None], cfg.threads)
        wall = _ms(start)
        it = iter(fids)
        for eta, dm, prob in zip(cfg.eta_grid, dms, probs):
            fid = float(next(it)) if dm is not None else None
            values = dict(base, kind="eta_sweep", eta=eta, history="+" * cfg.rounds, probability=prob, fidelity=fid)
            rows.append(ResultRow(ExperimentKind.FIDELITY_SWEEP, values, cfg.seed, dm is not None, wall))
    return sort_rows(rows)


def all_plus_branch(state, mm, eta: float):
    """Normalized state and probability of the all-(+1) outcome history."""
    psi = np.asarray(state, dtype=complex)
    for d in mm[0]:
        psi = apply_single_qubit_op(psi, 2, kraus_matrix(+1, eta, d))
    prob = float(norm_squared(psi))
    if prob <= EPS_PROB:
        return None, prob
    return normalize(psi), prob


def _curve_rows(kind, label, state, n, n1, assisting, cfg, space, ref_space):
    start = time.perf_counter()
    recs, _ = _sle_records(state, assisting, cfg.eta, cfg.rounds, space, cfg)
    ref = L.projective_le(state, PAIR, assisting, SearchSpace(ref_space))
    wall = _ms(start)
    rows = []
    for rec in recs:
        values = {
            "family": label, "N": n, "N1": n1 if label == "dicke" else None, "r": rec.round, "eta": cfg.eta,
            "value": rec.sle_value, "reference": ref, "directions": _labels(rec.optimal_dirs),
        }
        rows.append(ResultRow(kind, values, cfg.seed, rec.exact, wall))
    return rows


def run_sle_curve(cfg: ExperimentConfig) -> list[ResultRow]:
    specs = cfg.families or [cfg.family or {"family": "ghz", "n": 3}]
    rows = []
    for spec in specs:
        label, state, n, n1 = resolve_family(spec if isinstance(spec, dict) else {"family": spec})
        assisting = list(range(2, n))
        if cfg.pattern is not None:
            space = SearchSpace.fixed(cfg.pattern)
        elif label == "dicke" and cfg.space is None:
            space = SearchSpace.fixed(L.pattern_oracle("dicke", n, cfg.rounds, n1))
        else:
            space = _space(cfg.space, SpaceKind.OPS if n > 3 else SpaceKind.FULL_SPHERE)
        ref_space = cfg.reference_space or (SpaceKind.PAULI if label == "dicke" else SpaceKind.FULL_SPHERE)
        rows += _curve_rows(ExperimentKind.SLE_CURVE, label, state, n, n1, assisting, cfg, space, ref_space)
    return sort_rows(rows)


def run_custom(cfg: ExperimentConfig) -> list[ResultRow]:
    if cfg.state is None:
        raise ConfigError("custom experiment needs 'state' amplitudes")
    amps = np.array([complex(*a) if isinstance(a, (list, tuple)) else complex(a) for a in cfg.state])
    n = int(round(math.log2(len(amps))))
    if 2**n != len(amps):
        raise ConfigError("state length must be a power of two")
    if list(cfg.pair) != list(PAIR):
        raise ConfigError("custom runs use the target pair (0, 1)")
    assisting = cfg.assisting or list(range(2, n))
    space = _space(cfg.space, SpaceKind.FULL_SPHERE, cfg.pattern)
    ref_space = cfg.reference_space or SpaceKind.FULL_SPHERE
    try:
        state = normalize(amps)
    except EntlocError as exc:
        raise ConfigError(str(exc)) from None
    return sort_rows(_curve_rows(ExperimentKind.CUSTOM, "custom", state, n, None, assisting, cfg, space, ref_space))


RUNNERS = {
    ExperimentKind.TABLE1: run_table1,
    ExperimentKind.F_R_CURVE: run_f_r_curve,
    ExperimentKind.DELTA_SWEEP: run_delta_sweep,
    ExperimentKind.ROUNDS_VS_GGM: run_rounds_vs_ggm,
    ExperimentKind.CLASS_FRACTION: run_class_fraction,
    ExperimentKind.FIDELITY_SWEEP: run_fidelity_sweep,
    ExperimentKind.SLE_CURVE: run_sle_curve,
    ExperimentKind.CUSTOM: run_custom,
}


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    cfg.threads = resolve_threads(cfg.threads)
    return RUNNERS[cfg.experiment](cfg)
