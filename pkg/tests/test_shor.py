import math
from fractions import Fraction

import numpy as np
import pytest

from kpibench.gf2 import euler_totient_of_mersenne, mat_pow_mod2
from kpibench.noise import NoiseModel
from kpibench.shor import (
    THRESHOLD,
    CapacityError,
    PeriodInstance,
    analytic_eta,
    analytic_score_estimate,
    bits_to_int,
    build_period_circuit,
    continued_fraction_period,
    controlled_permutation,
    convergent_denominators,
    exact_success_probability,
    outcome_distribution,
    run_shor_trial,
    section,
    shor_score,
    success_table,
    uniform_baseline,
    verify_section,
)


def _convergents(y, m):
    # independent oracle: convergents via Fraction arithmetic on the partial quotients
    x = Fraction(y, 2**m)
    quotients = []
    while True:
        a = math.floor(x)
        quotients.append(a)
        if x == a:
            break
        x = 1 / (x - a)
    dens = []
    for k in range(1, len(quotients) + 1):
        f = Fraction(quotients[k - 1])
        for a in reversed(quotients[:k - 1]):
            f = a + 1 / f
        dens.append(f.denominator)
    return dens


@pytest.mark.parametrize("y", range(0, 128, 7))
def test_convergents_match_fraction_oracle(y):
    assert convergent_denominators(y, 7) == _convergents(y, 7)


def test_period_recovery_examples():
    # 37/128 is close to 2/7; its convergents end at denominator 7
    assert continued_fraction_period(37, 3) == 7
    assert continued_fraction_period(0, 3) == 1


@pytest.mark.parametrize("n", [2, 3, 4])
def test_success_table_counts_coprime_peaks(n):
    # each peak k/r with gcd(k, r) = 1 is recovered from its nearest y
    r = 2**n - 1
    m = 2 * n + 1
    table = success_table(n)
    for k in range(r):
        y = round(k * 2**m / r) % 2**m
        assert table[y] == (math.gcd(k, r) == 1)


@pytest.mark.parametrize("n,q", [(3, 0), (3, 2), (4, 1), (4, 5)])
def test_controlled_permutation_is_matrix_power(n, q):
    inst = PeriodInstance.default(n)
    m = mat_pow_mod2(inst.matrix, 2**q)
    rng = np.random.default_rng(q)
    for _ in range(10):
        x = rng.integers(0, 2, n)
        for ctrl in (0, 1):
            bits = np.zeros(inst.num_qubits, int)
            bits[q] = ctrl
            bits[inst.t:] = x
            for c, s, tgt in controlled_permutation(inst, q):
                bits[tgt] ^= bits[c] & bits[s]
            expected = m.apply(x) if ctrl else x
            assert list(bits[inst.t:]) == list(expected)


def test_instance_validation():
    inst = PeriodInstance.default(3)
    assert (inst.t, inst.num_qubits, inst.measured_bits, inst.period) == (11, 14, 7, 7)
    assert inst.p_s == euler_totient_of_mersenne(3) / 7 == 6 / 7
    with pytest.raises(ValueError):
        PeriodInstance.default(1)


def test_capacity_error_beyond_cap():
    with pytest.raises(CapacityError):
        build_period_circuit(PeriodInstance.default(8))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_exact_success_close_to_ideal(n):
    inst = PeriodInstance.default(n)
    dist = outcome_distribution(inst)
    assert dist.sum() == pytest.approx(1.0)
    # five extra control bits leave a sub-percent phase-estimation leak
    assert exact_success_probability(inst) == pytest.approx(inst.p_s, abs=0.01)


def test_decomposed_circuit_matches_exact_distribution():
    inst = PeriodInstance.default(2)
    from kpibench.statevector import StateVector
    from kpibench.circuit import Gate
    state = StateVector(inst.num_qubits)
    for ins in build_period_circuit(inst, decompose=True):
        if ins.gate is not Gate.MEASURE_Z:
            state.apply_unitary(ins.gate, ins.qubits, ins.angle)
    probs = state.probabilities(list(range(inst.measured_bits)))
    assert np.allclose(probs, outcome_distribution(inst), atol=1e-10)


def test_bits_to_int_msb_first():
    assert list(bits_to_int(np.array([[1, 0, 1], [0, 1, 1]]))) == [5, 3]


def test_uniform_baseline_exact_and_sampled():
    for n in (3, 4):
        table = success_table(n)
        exact = table.mean() / (euler_totient_of_mersenne(n) / (2**n - 1))
        assert uniform_baseline(n) == pytest.approx(exact)
        sampled = uniform_baseline(n, shots=200_000, seed=1)
        assert sampled == pytest.approx(exact, abs=0.01)


def test_analytic_eta_formula():
    for n, p2, pm in [(2, 1e-3, 1e-2), (3, 1e-4, 3e-2), (7, 1e-5, 1e-3)]:
        expected = (1 - p2) ** (12 * n**3 / math.log2(n)) * (1 - pm) ** (2 * n + 1)
        assert analytic_eta(n, p2, pm) == expected
    assert analytic_eta(2, 0, 0) == 1.0


def test_analytic_score_is_last_pass():
    s = analytic_score_estimate(1e-3, 1e-2)
    assert analytic_eta(s, 1e-3, 1e-2) > THRESHOLD >= analytic_eta(s + 1, 1e-3, 1e-2)
    assert analytic_score_estimate(0.5, 0.5) is None
    assert analytic_score_estimate(0, 0, n_max=30) == 30


def test_noisy_trial_degrades():
    inst = PeriodInstance.default(3)
    clean = run_shor_trial(inst, 400, None, seed=5)
    noisy = run_shor_trial(inst, 400, NoiseModel(p_1q=2e-3, p_2q=1e-2, p_meas=3e-2), seed=5)
    assert noisy.eta < clean.eta


def test_score_section_roundtrip():
    res = shor_score(None, 2000, seed=3, n_max=4)
    assert res.score == 4 and res.meaningful
    sec = section(res, 2000, None, 4)
    assert verify_section(sec) == []
    sec["trials"][1]["successes"] -= 500
    assert verify_section(sec)
