"""Acceptance criteria 1-9, each checked at its stated tolerance and time limit.

Every test prints one PASS/FAIL line (visible even without ``-s``).
"""

import json
import math
import time

import numpy as np
import pytest

from synclab.annulus import (
    AnnulusAdapter,
    lemma1_arc_verifier,
    random_crossing_arc,
    type_report,
)
from synclab.certifier import (
    NON_SYNC_FOR_STRUCTURE,
    TRANSVERSAL,
    certify,
    count_fixed_points,
    estimate_critical_epsilon,
    perturbation_sweep,
    rotated_structures,
    slave_section,
)
from synclab.cli import run
from synclab.linear import decide_map
from synclab.structure import DriveSequence, ProductStructure
from synclab.sync import INCONCLUSIVE, SYNCHRONIZING, TrialConfig, absolute_sync_test, lorenz_response_trial, sync_test
from synclab.systems import (
    HenonMap,
    LinearSystem,
    LorenzSystem,
    PlanarPolarMap,
    classify_radial_fixed_points,
    integrate,
    validate_homeomorphism,
)

import oracles


@pytest.fixture
def report(capsys):
    def _report(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {n}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return _report


def test_criterion_1_henon_absolute_sync(report):
    t0 = time.perf_counter()
    gens = [DriveSequence.iid_uniform(seed, -5.0, 5.0) for seed in range(100)]
    v = absolute_sync_test(HenonMap(), ProductStructure.identity(2, drive=[1]),
                           TrialConfig(n_steps=20, n_pairs=100, init_box=(-2.0, 2.0)), gens)
    exact = all(np.all(d[1:] == 0.0) and d[0] > 0.0 for d in v.series.values())
    elapsed = time.perf_counter() - t0
    ok = v.verdict == SYNCHRONIZING and exact and len(v.series) == 100 * 100 and elapsed < 1.0
    report(1, ok, f"{len(v.series)} pairs bit-exact from step 1: {exact}, {elapsed:.2f} s")


def _drive_signals(T, h):
    t = np.arange(int(round(T / h)) + 1) * h
    signals = []
    for i in range(4):
        x0 = np.random.default_rng([2, i]).uniform(-10, 10, 3) + [0, 0, 25]
        signals.append(("chaotic", integrate(LorenzSystem(), x0, T).states[:, 0]))
    for i in range(3):
        amp, freq, ph = np.random.default_rng([3, i]).uniform([5, 0.5, 0], [20, 5, 2 * np.pi])
        signals.append(("sinusoid", amp * np.sin(freq * t + ph)))
    for i in range(3):
        knots = np.arange(0.0, T + 0.1, 0.1)
        vals = np.random.default_rng([4, i]).uniform(-20, 20, knots.size)
        signals.append(("iid-interpolated", np.interp(t, knots, vals)))
    return signals


def test_criterion_2_lorenz_lyapunov_identity(report):
    t0 = time.perf_counter()
    T, h = 50.0, 1e-3
    worst_rise, worst_final = 0.0, 0.0
    for i, (_, sig) in enumerate(_drive_signals(T, h)):
        rng = np.random.default_rng([5, i])
        p1 = rng.uniform(-20, 20, 2)
        u = rng.standard_normal(2)
        p2 = p1 + u / np.linalg.norm(u)
        tr = lorenz_response_trial(LorenzSystem(), sig, p1, p2, T)
        V = tr.lyapunov_V
        worst_rise = max(worst_rise, float(np.max(np.diff(V)) / V.max()))
        worst_final = max(worst_final, float(tr.error[-1]))
    elapsed = time.perf_counter() - t0
    ok = worst_rise <= 1e-9 and worst_final < 1e-6 and elapsed < 10.0
    report(2, ok, f"max relative rise of V {worst_rise:.2e}, worst final error {worst_final:.2e}, "
                  f"{elapsed:.2f} s")


def test_criterion_3_linear_oracle_agreement(report):
    t0 = time.perf_counter()
    worst_value, verdict_mismatch = 0.0, 0
    agree = inconclusive = contradict = 0
    s = ProductStructure.identity(3)
    for i in range(200):
        A = np.random.default_rng([3, i]).standard_normal((3, 3))
        rep = decide_map(A, s)
        rho = oracles.spectral_radius(A[1:, 1:])
        worst_value = max(worst_value, abs(rep.criterion_value - rho))
        verdict_mismatch += rep.synchronizable != (rho < 1.0)
        v = sync_test(LinearSystem(A), s, TrialConfig(n_steps=1500, n_pairs=5, seed=i), [np.zeros(3)])
        if v.verdict == INCONCLUSIVE:
            inconclusive += 1
        elif (v.verdict == SYNCHRONIZING) == rep.synchronizable:
            agree += 1
        else:
            contradict += 1
    elapsed = time.perf_counter() - t0
    ok = (worst_value < 1e-6 and verdict_mismatch == 0 and agree >= 190 and contradict == 0
          and elapsed < 30.0)
    report(3, ok, f"criterion |diff| {worst_value:.1e}, decide vs oracle mismatches {verdict_mismatch}, "
                  f"empirical agree {agree}/200, inconclusive {inconclusive}, contradict {contradict}, "
                  f"{elapsed:.2f} s")


def test_criterion_4_polar_family(report):
    t0 = time.perf_counter()
    m = PlanarPolarMap()
    th = np.linspace(0, 2 * np.pi, 1000)
    drift = max(float(np.max(np.abs(np.hypot(*m.apply_batch(k * np.column_stack([np.cos(th), np.sin(th)])).T) - k)))
                for k in range(1, 6))
    kinds = classify_radial_fixed_points(m)
    expected = [(0.0, "sink"), (1.0, "source"), (2.0, "sink"), (3.0, "source"), (4.0, "sink"), (5.0, "source")]
    homeo = validate_homeomorphism(m).ok and not validate_homeomorphism(PlanarPolarMap(mu=1e-5)).ok
    elapsed = time.perf_counter() - t0
    ok = drift < 1e-12 and kinds == expected and homeo and elapsed < 1.0
    report(4, ok, f"circle drift {drift:.1e}, classification {kinds == expected}, homeomorphism check {homeo}, "
                  f"{elapsed:.2f} s")


def test_criterion_5_type_reports(report):
    t0 = time.perf_counter()
    m = PlanarPolarMap()
    a1 = type_report(AnnulusAdapter(m, 1.0, 2.0))
    a2 = type_report(AnnulusAdapter(m, 3.0, 4.0))
    d2 = a2.displacements
    oracle_iii = oracles.integer_witnesses(d2.bottom, d2.top, "iii")
    m3 = PlanarPolarMap(beta_coeff=3 * math.pi)
    b1 = type_report(AnnulusAdapter(m3, 1.0, 2.0))
    b2 = type_report(AnnulusAdapter(m3, 3.0, 4.0))
    elapsed = time.perf_counter() - t0
    window = a1.condition_iii.window
    ok = (a2.type_Q and a2.condition_iii.witnesses == oracle_iii == [-14, -13, -12, -11]
          and a1.type_P and not a1.type_Q and a1.condition_iii.witnesses == []
          and window == pytest.approx((-3.0, -2.0), abs=1e-9)
          and b1.type_Q and b2.type_Q and elapsed < 10.0)
    report(5, ok, f"A2 Q={a2.type_Q} (iii) {a2.condition_iii.witnesses}; A1 P={a1.type_P} Q={a1.type_Q} "
                  f"window ({window[0]:.6g}, {window[1]:.6g}); 3pi: Q={b1.type_Q},{b2.type_Q}; {elapsed:.2f} s")


def test_criterion_6_lemma1_arcs(report):
    t0 = time.perf_counter()
    m = PlanarPolarMap()
    found, worst = 0, 0.0
    for lo, hi in ((1.0, 2.0), (3.0, 4.0)):
        adapter = AnnulusAdapter(m, lo, hi)
        for i in range(100):
            w = lemma1_arc_verifier(adapter, random_crossing_arc(np.random.default_rng([6, int(lo), i])))
            if w is not None and w.t < w.t_prime and w.residual < 1e-8:
                found += 1
                worst = max(worst, w.residual)
    elapsed = time.perf_counter() - t0
    ok = found == 200 and elapsed < 30.0
    report(6, ok, f"witnesses on {found}/200 arcs, worst residual {worst:.1e}, {elapsed:.2f} s")


def test_criterion_7_certificate(report):
    t0 = time.perf_counter()
    m = PlanarPolarMap()
    psi = slave_section(m, ProductStructure.identity(2), [0.0, 0.0])
    trans = [p.t for p in count_fixed_points(psi, (0.05, 4.95)) if p.kind == TRANSVERSAL]
    near = [t for t in trans if abs(t - math.sqrt(2)) < 2e-3]
    brackets = oracles.sign_change_brackets(lambda t: oracles.psi_direct(t) - t, 1.40, 1.43, 1e-5)
    oracle_ok = len(brackets) == len(near) and all(a - 1e-9 <= t <= b + 1e-9 for t, (a, b) in zip(near, brackets))
    certs = certify(m, rotated_structures(12))
    all_non_sync = len(certs) == 13 and all(c.verdict == NON_SYNC_FOR_STRUCTURE for c in certs)
    elapsed = time.perf_counter() - t0
    ok = len(trans) >= 4 and len(near) >= 2 and oracle_ok and all_non_sync and elapsed < 5.0
    report(7, ok, f"{len(trans)} transversal fixed points, {len(near)} within 2e-3 of sqrt(2) "
                  f"(oracle match {oracle_ok}), 13 rotated structures certified: {all_non_sync}, {elapsed:.2f} s")


def test_criterion_8_stability_sweep(report):
    t0 = time.perf_counter()
    m = PlanarPolarMap()
    structures = rotated_structures(12)
    sweep = perturbation_sweep(m, [1e-5], 20, structures, seed=0, workers=2)
    est = estimate_critical_epsilon(m, structures)
    elapsed = time.perf_counter() - t0
    ok = sweep.fractions[1e-5] == 1.0 and 1e-4 <= est.low < est.high <= 1e-1 and elapsed < 60.0
    report(8, ok, f"fraction at 1e-5 over 20x{len(structures)}: {sweep.fractions[1e-5]}, "
                  f"critical bracket [{est.low:.5g}, {est.high:.5g}] ({est.direction}), {elapsed:.2f} s")


REPLAY = {
    "orbit": {"n": 200},
    "integrate": {"T": 2.0},
    "sync-test": {"n_steps": 150, "n_pairs": 5},
    "lyapunov": {"n": 1000},
    "linsync": {"matrix": [[2.0, 1.0, 0.0], [0.0, 0.5, 0.1], [0.3, 0.0, 0.2]], "search": True},
    "annulus": {"annuli": [[3.0, 4.0]]},
    "certify": {"n_rotations": 3, "n_shears": 2},
    "perturb-sweep": {"eps_list": [1e-5, 1e-2], "n_samples": 2, "n_rotations": 2,
                      "critical": {"direction": "radial_in", "eps_lo": 1e-5, "eps_hi": 1e-1, "iters": 4}},
}


def test_criterion_9_reproducibility(report, tmp_path):
    mismatched = []
    for command, cfg in REPLAY.items():
        cfg_path = tmp_path / f"{command}.json"
        cfg_path.write_text(json.dumps(cfg))
        first, second = tmp_path / f"{command}-a", tmp_path / f"{command}-b"
        assert run([command, "--config", str(cfg_path), "--out", str(first)]) == 0
        assert run([command, "--config", str(first / "manifest.json"), "--out", str(second)]) == 0
        names = json.loads((first / "manifest.json").read_text())["outputs"]
        if not names or any((first / n).read_bytes() != (second / n).read_bytes() for n in names):
            mismatched.append(command)
    ok = not mismatched
    report(9, ok, f"{len(REPLAY)} commands replayed from manifests, byte mismatches: {mismatched or 'none'}")
