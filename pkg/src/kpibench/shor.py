"""Period finding for maximum-cycle linear permutations over GF(2)^n."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from .circuit import Circuit, CircuitBuilder, Gate, decompose_toffoli, emit_qasm
from .gf2 import (
    BinaryMatrix,
    BinaryPolynomial,
    companion_matrix,
    euler_totient_of_mersenne,
    is_maximum_cycle,
    mat_pow2_mod2,
    primitive_polynomial,
    synthesize_cnot_network,
)
from .noise import NoiseModel, derive_rng
from .report import sha256_text
from .statevector import MAX_QUBITS, CapacityError, StateVector, qft_circuit, sample_shots
from .stats import binomial_sigma

THRESHOLD = 0.15
DEFAULT_SHOTS = 10_000
DEFAULT_EXTRA = 5  # control register size t = 2n + c
MIN_MEANINGFUL = 4
_STREAM = 3


@dataclass(frozen=True)
class PeriodInstance:
    n: int
    polynomial: BinaryPolynomial
    extra: int = DEFAULT_EXTRA

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.polynomial.degree != self.n:
            raise ValueError("polynomial degree must equal n")
        if self.extra < 1:
            raise ValueError("the control register needs t >= 2n + 1")
        if not is_maximum_cycle(self.matrix):
            raise ValueError(f"{self.polynomial} does not give a maximum-cycle permutation")

    @classmethod
    def default(cls, n: int, extra: int = DEFAULT_EXTRA) -> "PeriodInstance":
        return cls(n, primitive_polynomial(n), extra)

    @cached_property
    def matrix(self) -> BinaryMatrix:
        return companion_matrix(self.polynomial)

    @property
    def t(self) -> int:
        return 2 * self.n + self.extra

    @property
    def measured_bits(self) -> int:
        return 2 * self.n + 1

    @property
    def period(self) -> int:
        return 2**self.n - 1

    @property
    def num_qubits(self) -> int:
        return self.t + self.n

    @property
    def p_s(self) -> float:
        return euler_totient_of_mersenne(self.n) / self.period


@dataclass
class ShorTrial:
    instance: PeriodInstance
    shots: int
    successes: int
    q_s: float = field(init=False)
    eta: float = field(init=False)

    def __post_init__(self):
        self.q_s = self.successes / self.shots
        self.eta = self.q_s / self.instance.p_s

    @property
    def sigma(self) -> float:
        return binomial_sigma(self.successes, self.shots)

    @property
    def passed(self) -> bool:
        return self.eta > THRESHOLD


# ------------------------------------------------------------------ circuits

def controlled_permutation(inst: PeriodInstance, q: int) -> list[tuple[int, int, int]]:
    """Toffoli triples (control, source, target) realizing c-U_{M^(2^q)} on control qubit q."""
    net = synthesize_cnot_network(mat_pow2_mod2(inst.matrix, q))
    return [(q, inst.t + a, inst.t + b) for a, b in (ins.qubits for ins in net)]


def build_period_circuit(inst: PeriodInstance, decompose: bool = True) -> Circuit:
    """Phase estimation of U_M with a t-qubit control register; measures qubits 0..2n.

    Control qubit q drives U_{M^(2^q)}; after the swap-free inverse QFT qubit 0
    holds the most significant bit of the phase.
    """
    if inst.num_qubits > MAX_QUBITS:
        raise CapacityError(f"{inst.num_qubits} qubits exceed the statevector cap of {MAX_QUBITS}")
    b = CircuitBuilder(inst.num_qubits)
    b.x(inst.num_qubits - 1, noise="after-1q-gate")  # target register starts at 0...01
    for q in range(inst.t):
        b.h(q, noise="after-1q-gate")
    for q in range(inst.t):
        for c, s, tgt in controlled_permutation(inst, q):
            b.ccx(c, s, tgt)
    b.extend(qft_circuit(range(inst.t), inst.num_qubits, inverse=True, noise=True).instructions)
    for q in range(inst.measured_bits):
        b.measure(q, noise="before-measure")
    circ = b.build()
    return decompose_toffoli(circ) if decompose else circ


# ------------------------------------------------------------ post-processing

def convergent_denominators(y: int, bits: int) -> list[int]:
    """Denominators of the continued-fraction convergents of y / 2^bits."""
    num, den = y, 1 << bits
    h0, h1 = 1, 0  # q_{-2}, q_{-1}
    out = []
    while den:
        a, r = divmod(num, den)
        h0, h1 = h1, a * h1 + h0
        out.append(h1)
        num, den = den, r
    return out


def continued_fraction_period(y: int, n: int) -> int:
    """Largest convergent denominator of y / 2^(2n+1) not exceeding 2^n - 1."""
    limit = 2**n - 1
    best = 1
    for q in convergent_denominators(y, 2 * n + 1):
        if q <= limit:
            best = max(best, q)
    return best


def success_table(n: int) -> np.ndarray:
    """Boolean table over y in [0, 2^(2n+1)): does y recover the period?"""
    r = 2**n - 1
    return np.array([continued_fraction_period(y, n) == r for y in range(2 ** (2 * n + 1))])


def bits_to_int(bits: np.ndarray) -> np.ndarray:
    m = bits.shape[1]
    return bits.astype(np.int64) @ (1 << np.arange(m - 1, -1, -1, dtype=np.int64))


# ------------------------------------------------------------------- running

def outcome_distribution(inst: PeriodInstance) -> np.ndarray:
    """Exact noiseless distribution of the measured 2n+1-bit integer."""
    circ = build_period_circuit(inst, decompose=False)
    state = StateVector(inst.num_qubits)
    for ins in circ:
        if ins.gate is not Gate.MEASURE_Z:
            state.apply_unitary(ins.gate, ins.qubits, ins.angle)
    return state.probabilities(list(range(inst.measured_bits)))


def exact_success_probability(inst: PeriodInstance) -> float:
    return float(outcome_distribution(inst)[success_table(inst.n)].sum())


def run_shor_trial(inst: PeriodInstance, shots: int, model: NoiseModel | None, seed: int) -> ShorTrial:
    if shots < 1:
        raise ValueError("shots must be positive")
    rng = derive_rng(seed, _STREAM, inst.n)
    table = success_table(inst.n)
    if model is None or model.is_noiseless():
        ys = rng.choice(table.size, size=shots, p=outcome_distribution(inst))
    else:
        ys = bits_to_int(sample_shots(build_period_circuit(inst), model, shots, rng))
    return ShorTrial(inst, shots, int(table[ys].sum()))


def uniform_baseline(n: int, shots: int | None = None, seed: int = 0) -> float:
    """Success ratio of uniformly random 2n+1-bit strings (exact if ``shots`` is None)."""
    inst_p = euler_totient_of_mersenne(n) / (2**n - 1)
    table = success_table(n)
    if shots is None:
        return float(table.mean()) / inst_p
    ys = derive_rng(seed, _STREAM, n, 1).integers(0, table.size, shots)
    return float(table[ys].mean()) / inst_p


def analytic_eta(n: int, p_2q: float, p_m: float) -> float:
    """(1 - p_2q)^(12 n^3 / log2 n) * (1 - p_m)^(2n + 1)."""
    if n < 2:
        raise ValueError("the estimate needs n >= 2")
    return (1 - p_2q) ** (12 * n**3 / math.log2(n)) * (1 - p_m) ** (2 * n + 1)


def analytic_score_estimate(p_2q: float, p_m: float, n_max: int = 64) -> int | None:
    """Largest n <= n_max with analytic_eta(n) > 0.15 (None if n = 2 already fails)."""
    if not (0 <= p_2q < 1 and 0 <= p_m < 1):
        raise ValueError("error rates must lie in [0, 1)")
    score = None
    for n in range(2, n_max + 1):
        if analytic_eta(n, p_2q, p_m) <= THRESHOLD:
            break
        score = n
    return score


@dataclass
class ShorSearch:
    score: int | None
    trials: list[ShorTrial]
    capped: bool

    @property
    def meaningful(self) -> bool:
        return self.score is not None and self.score >= MIN_MEANINGFUL


def shor_score(model: NoiseModel | None, shots: int, seed: int, n_max: int = 5, n_min: int = 3,
               extra: int = DEFAULT_EXTRA, progress=None) -> ShorSearch:
    """Largest n_s such that every n in [n_min, n_s] passes."""
    trials = []
    score = None
    for n in range(n_min, n_max + 1):
        trial = run_shor_trial(PeriodInstance.default(n, extra), shots, model, seed)
        trials.append(trial)
        if progress:
            progress(n, trial.passed)
        if not trial.passed:
            break
        score = n
    return ShorSearch(score, trials, score == n_max)


# ----------------------------------------------------------------- reporting

def trial_to_dict(trial: ShorTrial) -> dict[str, Any]:
    inst = trial.instance
    return {
        "n": inst.n,
        "polynomial": str(inst.polynomial),
        "t": inst.t,
        "qubits": inst.num_qubits,
        "circuit_sha256": sha256_text(emit_qasm(build_period_circuit(inst))),
        "shots": trial.shots,
        "successes": trial.successes,
        "q_s": trial.q_s,
        "sigma": trial.sigma,
        "p_s": inst.p_s,
        "eta": trial.eta,
        "passed": trial.passed,
    }


def section(result: ShorSearch, shots: int, model: NoiseModel | None, n_max: int) -> dict[str, Any]:
    p2, pm = (model.p_2q, model.p_meas) if model else (0.0, 0.0)
    return {
        "inputs": {"shots": shots, "n_max": n_max, "extra_control_qubits": result.trials[0].instance.extra
                   if result.trials else DEFAULT_EXTRA},
        "threshold": THRESHOLD,
        "trials": [trial_to_dict(t) for t in result.trials],
        "score": result.score,
        "meaningful": result.meaningful,
        "capped": result.capped,
        "analytic_estimate": analytic_score_estimate(p2, pm),
    }


def verify_section(sec: dict[str, Any]) -> list[str]:
    problems = []
    expected = None
    prefix = True
    for t in sec["trials"]:
        n = t["n"]
        p_s = euler_totient_of_mersenne(n) / (2**n - 1)
        q = t["successes"] / t["shots"]
        eta = q / p_s
        if q != t["q_s"] or eta != t["eta"] or p_s != t["p_s"]:
            problems.append(f"estimate mismatch at n={n}")
        if (eta > THRESHOLD) != t["passed"]:
            problems.append(f"verdict mismatch at n={n}")
        prefix = prefix and eta > THRESHOLD
        if prefix:
            expected = n
    if expected != sec["score"]:
        problems.append(f"score {sec['score']} does not match recomputed {expected}")
    if sec["meaningful"] != (expected is not None and expected >= MIN_MEANINGFUL):
        problems.append("meaningful flag mismatch")
    return problems
