"""Acceptance criteria, one test per criterion (criterion 8 has three parts).

Each test appends a PASS/FAIL line that the terminal summary prints under
"acceptance criteria". Runtime limits are checked alongside the values.
"""

import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from entloc import localize as L
from entloc.expcli import ExperimentConfig, run_experiment
from entloc.expcli.experiments import branch_ensemble
from entloc.entanglement import bell_fidelity
from entloc.povm import as_measurement_matrix
from entloc.qcore import reduced_density
from entloc.states import ghz_state, make_gghz, make_gw, sample_haar, w_state

import conftest
from oracles import ghz_ops_greedy

ETAS = (0.2, 0.4, 0.6, 0.8, 1.0)
C0_GRID = np.linspace(0.05, 0.95, 10)
VERY_SLOW = os.environ.get("ENTLOC_VERY_SLOW") == "1"


class Criterion:
    """Collects checks for one criterion and reports a single line."""

    def __init__(self, label, limit_s=None):
        self.label, self.limit_s = label, limit_s
        self.failures, self.notes = [], []
        self.start = time.perf_counter()

    def check(self, ok, message):
        if not ok:
            self.failures.append(message)

    def note(self, message):
        self.notes.append(message)

    def finish(self):
        elapsed = time.perf_counter() - self.start
        if self.limit_s is not None:
            self.check(elapsed < self.limit_s, f"runtime {elapsed:.1f}s over {self.limit_s}s")
        status = "FAIL" if self.failures else "PASS"
        detail = "; ".join(self.failures or self.notes)
        conftest.ACCEPTANCE_LINES.append(f"{status} {self.label} ({elapsed:.1f}s){': ' + detail if detail else ''}")
        assert not self.failures, "; ".join(self.failures)


def test_criterion_01_single_round_gghz_oracle():
    c = Criterion("1 single-round gGHZ oracle", 10)
    worst = 0.0
    for c0 in C0_GRID:
        c1 = math.sqrt(1 - c0**2)
        state = make_gghz(3, c0, c1)
        for eta in ETAS:
            value, _ = L.single_round_le(state, (0, 1), [2], eta)
            worst = max(worst, abs(value - eta * c0 * c1))
    c.check(worst <= 1e-6, f"max deviation {worst:.2e}")
    c.note(f"max deviation {worst:.2e} over 50 points")
    c.finish()


def test_criterion_02_two_round_gghz_oracle():
    c = Criterion("2 two-round gGHZ oracle", 30)
    worst, worst_angle = 0.0, 0.0
    for c0 in C0_GRID:
        c1 = math.sqrt(1 - c0**2)
        state = make_gghz(3, c0, c1)
        for eta in ETAS:
            recs = L.sequential_le(state, (0, 1), [2], eta, 2)
            worst = max(worst, abs(recs[1].sle_value - eta * math.sqrt(2 - eta**2) * c0 * c1))
            cosine = float(recs[0].optimal_dirs[0].vector @ recs[1].optimal_dirs[0].vector)
            worst_angle = max(worst_angle, abs(math.acos(np.clip(cosine, -1, 1)) - math.pi / 2))
    c.check(worst <= 1e-6, f"max value deviation {worst:.2e}")
    c.check(worst_angle <= 1e-3, f"max deviation from orthogonality {worst_angle:.2e} rad")
    c.note(f"max deviation {worst:.2e}, orthogonality within {worst_angle:.1e} rad")
    c.finish()


TABLE1 = {3: (0.4, 0.498), 4: (0.32, 0.496), 5: (0.256, 0.494), 6: (0.2048, 0.492), 7: (0.16384, 0.490)}


def _table1(c, ns):
    cfg = ExperimentConfig(experiment="table1", n_values=list(ns), eta=0.8, rounds=6, max_histories=2**30)
    for row in run_experiment(cfg):
        v = row.values
        e1, e6 = TABLE1[v["N"]]
        c.check(abs(v["e1_seq"] - e1) <= 5e-4, f"N={v['N']} E1={v['e1_seq']:.6f}")
        c.check(abs(v["eR_seq"] - e6) <= 2e-3, f"N={v['N']} E6={v['eR_seq']:.6f}")
        oracle, _ = ghz_ops_greedy(v["N"], 0.8, 6)
        c.check(abs(v["eR_seq"] - oracle[-1]) <= 1e-9, f"N={v['N']} differs from factorized oracle")
        c.note(f"N={v['N']}: {v['e1_seq']:.6f}, {v['eR_seq']:.6f} [{v['engine']}]")


def test_criterion_03_table1():
    c = Criterion("3 GHZ_N table, N=3..5", 600)
    _table1(c, (3, 4, 5))
    c.finish()


@pytest.mark.slow
def test_criterion_03_table1_n6():
    c = Criterion("3 GHZ_N table, N=6 (long-running)")
    _table1(c, (6,))
    c.finish()


@pytest.mark.slow
@pytest.mark.skipif(not VERY_SLOW, reason="N=7 needs 2**30 outcome histories; set ENTLOC_VERY_SLOW=1")
def test_criterion_03_table1_n7():
    c = Criterion("3 GHZ_N table, N=7 (very long-running)")
    _table1(c, (7,))
    c.finish()


def test_criterion_04_observations():
    c = Criterion("4 rounds to threshold", 60)
    r_ghz = L.rounds_to_threshold(ghz_state(3), (0, 1), [2], 0.8, 5e-3, 10)
    r_w = L.rounds_to_threshold(w_state(), (0, 1), [2], 0.8, 5e-3, 10)
    c.check(r_ghz is not None and r_ghz <= 6, f"GHZ r={r_ghz}")
    c.check(r_w is not None and r_w <= 4, f"W r={r_w}")
    c.note(f"GHZ r={r_ghz}, W r={r_w}")
    c.finish()


def test_criterion_05_delta_monotonicity():
    c = Criterion("5 delta monotonicity and closed forms")
    worst_rise, worst_form = 0.0, 0.0
    for family in ("gghz", "gw"):
        for seed in range(20):
            coeffs = sample_haar(family, seed).coeffs
            for eta in (0.5, 0.8):
                d = [rec.delta for rec in L.delta_series(family, coeffs, eta, 6)]
                worst_rise = max(worst_rise, max(b - a for a, b in zip(d, d[1:])))
                if family == "gghz":
                    worst_form = max(worst_form, abs(d[0] - (1 - eta)),
                                     abs(d[1] - (1 - eta * math.sqrt(2 - eta**2))))
    c.check(worst_rise <= 1e-6, f"largest delta increase {worst_rise:.2e}")
    c.check(worst_form <= 1e-6, f"closed-form deviation {worst_form:.2e}")
    c.note(f"largest rise {worst_rise:.1e}, closed-form deviation {worst_form:.1e}")
    c.finish()


def test_criterion_06_global_equals_sequential():
    c = Criterion("6 GLE = SLE", 300)
    cases = [("GHZ3", ghz_state(3))]
    cases += [(f"gW seed {s}", sample_haar("gw", s).state()) for s in range(5)]
    for name, state in cases:
        seq = L.sequential_le(state, (0, 1), [2], 0.8, 2)[-1].sle_value
        glob, _ = L.global_le(state, (0, 1), [2], 0.8, 2)
        gap = glob - seq
        c.check(abs(gap) <= 1e-4, f"{name}: GLE-SLE={gap:.2e}")
        c.note(f"{name} gap {gap:.1e}")
    c.finish()


def test_criterion_07_ops_sufficiency():
    c = Criterion("7 OPS sufficiency for gW", 600)
    worst = 0.0
    for seed in range(100):
        state = sample_haar("gw", seed).state()
        full = L.sequential_le(state, (0, 1), [2], 0.8, 4)[-1].sle_value
        ops = L.sequential_le(state, (0, 1), [2], 0.8, 4, L.OPS)[-1].sle_value
        worst = max(worst, abs(full - ops))
    c.check(worst <= 1e-3, f"max |FULL-OPS| {worst:.2e}")
    c.note(f"max |FULL-OPS| {worst:.1e}")
    c.finish()


def _fidelities(state, mm):
    ens = branch_ensemble(state, as_measurement_matrix(mm), 0.8)
    return np.array([bell_fidelity(dm) for dm in reduced_density(ens.states, (0, 1))])


_FID_BUDGET = {"spent": 0.0}


def _fid_criterion(label):
    c = Criterion(label)
    return c


def _fid_finish(c):
    _FID_BUDGET["spent"] += time.perf_counter() - c.start
    c.check(_FID_BUDGET["spent"] < 300, f"criterion 8 cumulative runtime {_FID_BUDGET['spent']:.0f}s over 300s")
    c.finish()


def test_criterion_08a_ghz_six_rounds():
    c = _fid_criterion("8a GHZ R=6 fidelities")
    f = _fidelities(ghz_state(3), L.pattern_oracle("gghz", 3, 6))
    count = int(np.sum(f > 0.99))
    c.check(len(f) == 64 and count == 52, f"{count}/{len(f)} above 0.99")
    c.note(f"{count}/{len(f)} above 0.99, rest in [{f[f <= 0.99].min():.4f}, {f[f <= 0.99].max():.4f}]")
    _fid_finish(c)


def test_criterion_08b_ghz_seven_rounds():
    c = _fid_criterion("8b GHZ R=7 fidelities")
    f = _fidelities(ghz_state(3), L.pattern_oracle("gghz", 3, 7))
    above = f > 0.98
    count, rest = int(np.sum(above)), f[~above]
    pct = 100 * count / len(f)
    c.check(len(f) == 128 and round(pct, 2) == 90.63, f"{count}/{len(f)} = {pct:.3f}% above 0.98")
    c.check(rest.size > 0 and rest.min() >= 0.56 and rest.max() <= 0.57,
            f"remainder in [{rest.min():.4f}, {rest.max():.4f}], expected within [0.56, 0.57]")
    c.note(f"{count}/{len(f)} ({pct:.3f}%) above 0.98, remainder in [{rest.min():.4f}, {rest.max():.4f}]")
    _fid_finish(c)


def test_criterion_08c_w_four_rounds():
    c = _fid_criterion("8c W R=4 fidelities")
    f = _fidelities(w_state(), L.pattern_oracle("w", 3, 4, variant=1))
    above = f > 0.95
    count, rest = int(np.sum(above)), f[~above]
    c.check(len(f) == 16 and count == 8, f"{count}/{len(f)} above 0.95")
    c.check(rest.min() >= 0.5 and rest.max() <= 0.66, f"remainder in [{rest.min():.4f}, {rest.max():.4f}]")
    c.note(f"{count}/{len(f)} above 0.95, remainder in [{rest.min():.4f}, {rest.max():.4f}]")
    _fid_finish(c)


def test_criterion_09_class_fractions():
    c = Criterion("9 class fractions", 1800)
    cfg = ExperimentConfig(experiment="class_fraction", sample_size=200, eta=0.8, rounds=6, seed=7)
    rows = run_experiment(cfg)
    frac = {}
    for row in rows:
        frac.setdefault(row.values["family"], {})[row.values["r"]] = row.values["fraction"]
    w, g = frac["w_class"], frac["ghz_class"]
    c.check(w[4] >= 0.95, f"W F(4)={w[4]}")
    c.check(g[6] <= 0.5, f"GHZ F(6)={g[6]}")
    for name, f in (("W", w), ("GHZ", g)):
        c.check(all(f[r + 1] >= f[r] for r in range(1, 6)), f"{name} F not monotone: {f}")
    c.note(f"W F(4)={w[4]:.3f}, GHZ F(6)={g[6]:.3f}")
    c.finish()


def test_criterion_10_dicke_convergence():
    c = Criterion("10 Dicke convergence", 900)
    fams = [{"family": "dicke", "n": n, "n1": k} for n, k in ((4, 1), (4, 2), (5, 1), (5, 2))]
    cfg = ExperimentConfig(experiment="sle_curve", families=fams, eta=0.8, rounds=6)
    for row in run_experiment(cfg):
        v = row.values
        if v["r"] != 6:
            continue
        gap = v["reference"] - v["value"]
        c.check(abs(gap) <= 5e-3, f"D({v['N']},{v['N1']}) gap {gap:.2e}")
        c.note(f"D({v['N']},{v['N1']}) gap {gap:.1e}")
    c.finish()


SUITES = {
    "POVM completeness": "test_povm_completeness",
    "probability conservation": "test_probability_conservation",
    "dedup safety": "test_dedup_safety",
    "negativity local-unitary invariance": "test_negativity_local_unitary_invariance",
    "SLE round monotonicity": "test_sle_round_monotonicity",
    "sharp dominance": "test_sharp_dominance",
}


@pytest.mark.parametrize("suite", list(SUITES))
def test_criterion_11_invariant_suites(suite):
    c = Criterion(f"11 invariant suite: {suite}", 120)
    target = f"{Path(__file__).with_name('test_properties.py')}::{SUITES[suite]}"
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", target],
        capture_output=True, text=True, check=False,
    )
    c.check(proc.returncode == 0, proc.stdout.strip().splitlines()[-1] if proc.stdout else proc.stderr[-200:])
    c.finish()
