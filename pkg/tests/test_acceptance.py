"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Seeds are fixed here, before any result is seen, and never tuned.
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from dense import final_density
from kpibench.cli import FIG4_P2Q, FIG4_PM, RunConfig, run_benchmark
from kpibench.clv import STAB_THRESHOLD, evaluate_clv, run_clv_trial, worst_case
from kpibench.ghz import ghz_score, preparation, run_ghz_trial
from kpibench.noise import NoiseModel, derive_rng, scheme_to_model
from kpibench.qec import (
    BASES,
    BellOutcomeTally,
    bell_fidelity_from_tally,
    first_order_infidelity,
    logical_bell_tally,
    physical_bell_tally,
    pooled_fidelity,
    q_score,
)
from kpibench.report import canonical_digest, read_report, verify_report
from kpibench.shor import (
    PeriodInstance,
    analytic_eta,
    analytic_score_estimate,
    run_shor_trial,
    uniform_baseline,
)
from kpibench.stats import binomial_sigma, expectation_sigma

SEED = 1
SECOND_SEED = 2
GOLDEN = Path(__file__).parent / "golden"
QEC_SHOTS = 100_000


def _monotone_down(values, sigmas, k=2.0):
    """True if no step rises by more than k combined sigmas."""
    return all(b <= a + k * math.hypot(sa, sb) for a, b, sa, sb in zip(values, values[1:], sigmas, sigmas[1:]))


def test_1_clv_noiseless_exactness(acceptance):
    bound = 2 / math.sqrt(512)
    stab_ok, worst_d, over, verdicts = True, 0.0, 0, []
    for n in (2, 4, 8, 16):
        trial = run_clv_trial(n, 512, None, SEED)
        for r in trial.records:
            stab_ok &= all(e.value == 1.0 for e in r.stabilizers)
            over += sum(abs(e.value) > bound for e in r.destabilizers)
            worst_d = max(worst_d, max(abs(e.value) for e in r.destabilizers))
        verdicts.append(evaluate_clv(trial).passed)
    ok = stab_ok and over == 0 and all(verdicts)
    acceptance(1, ok, f"<S>=1 exactly: {stab_ok}; |<D>| over 2/sqrt(512): {over} of 64 (max {worst_d:.4f}); "
                      f"verdicts at N=2,4,8,16: {verdicts}")
    assert ok


def test_2_clv_noisy_shape(acceptance):
    model = NoiseModel(p_2q=1e-3, p_meas=1e-2)
    ns = [2, 4, 6, 8, 12, 16, 20, 24, 32, 40, 48, 64, 80, 100]
    worst, sig, destab_out, max_z = [], [], 0, 0.0
    crossing = None
    for n in ns:
        trial = run_clv_trial(n, 512, model, SEED)
        s, _ = worst_case(trial)
        worst.append(s)
        sig.append(expectation_sigma(s, 512))
        z = [abs(e.value) / expectation_sigma(0.0, 512) for r in trial.records for e in r.destabilizers]
        destab_out += sum(v > 3 for v in z)
        max_z = max(max_z, *z)
        if s < STAB_THRESHOLD:
            crossing = n
            break
    mono = _monotone_down(worst, sig)
    ok = mono and crossing is not None and destab_out == 0
    acceptance(2, ok, f"worst <S> {', '.join(f'{n}:{s:.3f}' for n, s in zip(ns, worst))}; crosses 1/e at N={crossing}; "
                      f"monotone within 2 sigma: {mono}; destabilizers beyond 3 sigma: {destab_out} of "
                      f"{16 * len(worst)} (largest |z| {max_z:.2f})")
    assert ok


def test_3_ghz_noiseless_and_noisy(acceptance):
    clean = ghz_score(None, 8192, SEED, 2, 64)
    exact = all(t.f_min == 1.0 for t in clean.trials) and clean.score == 64
    noisy = ghz_score(NoiseModel(p_2q=1e-3, p_meas=1e-2), 8192, SEED, 2, 64)
    decreasing = _monotone_down([t.f_min for t in noisy.trials], [t.sigma_f for t in noisy.trials])
    finite = noisy.score is not None and not noisy.capped
    p2s, pms = [1e-4, 3e-4, 1e-3, 3e-3], [1e-3, 3e-3, 1e-2, 3e-2]
    grid = np.array([[ghz_score(NoiseModel(p_2q=a, p_meas=b), 8192, SEED, 2, 64).score or 1 for b in pms]
                     for a in p2s])
    grid_mono = bool((np.diff(grid, axis=0) <= 0).all() and (np.diff(grid, axis=1) <= 0).all())
    ok = exact and decreasing and finite and grid_mono
    acceptance(3, ok, f"noiseless F_min=1 to N=64: {exact}; noisy score {noisy.score}, F_min decreasing: "
                      f"{decreasing}; grid rows p2q x cols pm = {grid.tolist()}, monotone: {grid_mono}")
    assert ok


def test_4_ghz_bound_soundness(acceptance):
    rng = derive_rng(SEED, 404)
    violations, worst_gap, checks = [], -1.0, 0
    for k in range(50):
        p1, p2, pi, pm = 10 ** rng.uniform(-4, math.log10(5e-2), 4)
        model = NoiseModel(p_1q=p1, p_2q=p2, p_init=pi, p_meas=pm)
        for n in range(2, 7):
            t = run_ghz_trial(n, 8192, model, SEED, trial=k)
            rho = final_density(preparation(n), model)
            truth = 0.5 * float(np.real(rho[0, 0] + rho[-1, -1] + rho[0, -1] + rho[-1, 0]))
            gap = t.f_min - truth - 3 * t.sigma_f
            worst_gap = max(worst_gap, gap)
            checks += 1
            if gap > 0:
                violations.append((k, n))
    ok = not violations
    acceptance(4, ok, f"{checks} checks over 50 noise settings, N=2..6; violations {violations}; "
                      f"largest F_min - F_true - 3 sigma = {worst_gap:.4f}")
    assert ok


def test_5_shor_noiseless_success(acceptance):
    parts, ok = [], True
    for n, target in ((3, 6 / 7), (4, 8 / 15)):
        t = run_shor_trial(PeriodInstance.default(n), 10_000, None, SEED)
        sigma = binomial_sigma(t.successes, t.shots)
        good = abs(t.q_s - target) <= 3 * sigma
        ok &= good
        parts.append(f"n={n}: q_s={t.q_s:.4f} target {target:.4f} sigma {sigma:.4f} ({'ok' if good else 'off'})")
    acceptance(5, ok, "; ".join(parts))
    assert ok


def test_6_shor_uniform_baseline(acceptance):
    shots = 10_000
    parts, ok = [], True
    for n, stated in ((3, 0.18), (4, 0.12)):
        inst = PeriodInstance.default(n)
        eta = uniform_baseline(n, shots, SEED)
        sigma = binomial_sigma(round(eta * inst.p_s * shots), shots) / inst.p_s
        good = abs(eta - stated) <= 3 * sigma
        ok &= good
        parts.append(f"n={n}: eta={eta:.4f} (exact {uniform_baseline(n):.4f}) vs {stated} +- 3x{sigma:.4f} "
                     f"({'ok' if good else 'off'})")
    separates = uniform_baseline(3) > 0.15 > uniform_baseline(4)
    acceptance(6, ok, "; ".join(parts) + f"; 0.15 separates n=3 from n=4: {separates}")
    assert ok


def test_7_analytic_grid(acceptance):
    spots = [(2, 1e-3, 1e-2), (3, 1e-3, 1e-2), (5, 1e-4, 3e-2), (8, 1e-5, 1e-3)]
    exact = all(analytic_eta(n, a, b) == (1 - a) ** (12 * n**3 / math.log2(n)) * (1 - b) ** (2 * n + 1)
                for n, a, b in spots)
    # n = 2: exponent 96 and 5, by hand
    exact &= analytic_eta(2, 1e-3, 1e-2) == 0.999**96.0 * 0.99**5
    grid = np.array([[analytic_score_estimate(a, b) or 1 for b in FIG4_PM] for a in FIG4_P2Q])
    drop_2q = np.mean(grid[:-2, :] - grid[2:, :])  # one decade is two grid steps
    drop_m = np.mean(grid[:, :-2] - grid[:, 2:])
    ok = exact and drop_2q >= 2 * drop_m
    acceptance(7, ok, f"formula exact at spot values: {exact}; mean score drop per decade p2q {drop_2q:.2f} "
                      f"vs pm {drop_m:.2f} (ratio {drop_2q / drop_m:.2f})")
    assert ok


def test_8_estimator_identity(acceptance):
    rng = derive_rng(SEED, 808)
    mismatches = 0
    for _ in range(20_000):
        n = int(rng.integers(1, 10**9))
        errs = [int(e) for e in rng.integers(0, n + 1, 3)]
        t = BellOutcomeTally(dict.fromkeys(BASES, n), dict(zip(BASES, errs)))
        mismatches += bell_fidelity_from_tally(t).value != pooled_fidelity(sum(errs), 3 * n)
    ok = mismatches == 0
    acceptance(8, ok, f"bit-exact agreement on 20000 random equal-count tallies; mismatches {mismatches}")
    assert ok


def test_9_physical_infidelity(acceptance):
    model = scheme_to_model("sd6", 1e-3)
    predicted = first_order_infidelity(model)
    literal = 2 * model.p_init + model.p_1q + model.p_2q * 8 / 15 + 2 * model.p_meas
    est = [bell_fidelity_from_tally(physical_bell_tally(model, QEC_SHOTS, s)) for s in (SEED, SECOND_SEED)]
    inf = [1 - e.value for e in est]
    within = all(abs(i - predicted) <= 0.25 * predicted for i in inf)
    agree = abs(inf[0] - inf[1]) <= 3 * math.hypot(est[0].sigma, est[1].sigma)
    ok = within and agree
    acceptance(9, ok, f"1-F = {inf[0]:.5f} +- {est[0].sigma:.5f}, {inf[1]:.5f} +- {est[1].sigma:.5f}; "
                      f"enumerated first order {predicted:.5f} (within 25%: {within}); seeds agree at 3 sigma: "
                      f"{agree}; literal rate sum {literal:.5f}")
    assert ok


def _q(scheme, p, d, seed=SEED):
    model = scheme_to_model(scheme, p)
    return q_score([physical_bell_tally(model, QEC_SHOTS, seed)], logical_bell_tally(d, model, QEC_SHOTS, seed).tally)


def test_10_qec_benefit(acceptance):
    si3 = _q("si1000", 1e-3, 3)
    sd3 = _q("sd6", 1e-3, 3)
    sd5 = _q("sd6", 1e-3, 5)

    def fmt(q):
        return "unbounded" if q.unbounded else f"{q.value:.3f} +- {q.sigma:.3f}"

    a = si3.unbounded is False and 1 <= si3.value <= 4
    b = not sd3.unbounded and sd3.value < 1
    c = sd5.unbounded or sd5.value > 1
    ok = a and b and c
    acceptance(10, ok, f"SI1000 d=3 Q={fmt(si3)} in [1,4]: {a}; SD6 d=3 Q={fmt(sd3)} < 1: {b}; "
                       f"SD6 d=5 Q={fmt(sd5)} > 1: {c}")
    assert ok


def test_11_suppression_slope(acceptance):
    ps = [3e-3, 1e-3, 3e-4]
    inf = []
    for p in ps:
        run = logical_bell_tally(3, scheme_to_model("sd6", p), QEC_SHOTS, SEED)
        inf.append(1 - bell_fidelity_from_tally(run.tally).value)
    slope = float(np.polyfit(np.log(ps), np.log(inf), 1)[0])
    ok = 1.6 <= slope <= 2.4
    acceptance(11, ok, f"logical infidelities {', '.join(f'{p:g}:{i:.3g}' for p, i in zip(ps, inf))}; "
                       f"log-log slope {slope:.3f}")
    assert ok


_DETERMINISM: dict[str, bool] = {}


@pytest.mark.parametrize("bench", ["clv", "ghz", "shor", "qec"])
def test_12_determinism(acceptance, bench, tmp_path):
    cfg = RunConfig.from_sources(json.loads((GOLDEN / f"{bench}.config.json").read_text()), {})
    for sub in ("a", "b"):
        (tmp_path / sub).mkdir()
    first = run_benchmark(cfg, tmp_path / "a", lambda _msg: None)
    second = run_benchmark(cfg, tmp_path / "b", lambda _msg: None)
    golden = read_report(GOLDEN / f"{bench}.report.json")
    same = canonical_digest(first) == canonical_digest(second) == canonical_digest(golden)
    clean = verify_report(golden) == []
    _DETERMINISM[bench] = same and clean
    if len(_DETERMINISM) == 4:
        acceptance(12, all(_DETERMINISM.values()), "repeat and golden digests identical, verify clean: "
                   + ", ".join(f"{b}={v}" for b, v in _DETERMINISM.items()))
    assert same and clean
