"""Clifford Volume: random Cliffords, stabilizer/destabilizer expectations, score search."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .circuit import Circuit, CircuitBuilder, Gate, emit_qasm
from .frame import FrameSimulator, packed_to_bool, run_instructions
from .noise import NoiseModel, derive_rng
from .pauli import (
    PauliString,
    StabilizerTableau,
    sample_destabilizer,
    sample_random_clifford,
    stabilizer_group_element,
    synthesize_clifford_circuit,
)
from .report import sha256_text
from .stats import aggregate_sigma, expectation_sigma, mean_sigma

STAB_THRESHOLD = 1 / math.e
DESTAB_THRESHOLD = 1 / (2 * math.e)
MIN_SHOTS = 512
GROUP = 4
_STREAM = 1  # stream label for CLV draws


@dataclass(frozen=True)
class ObservableEstimate:
    kind: str  # "stabilizer" | "destabilizer"
    pauli: PauliString
    value: float
    shots: int

    @property
    def sigma(self) -> float:
        return expectation_sigma(self.value, self.shots)


@dataclass
class CliffordRecord:
    tableau: StabilizerTableau
    circuit: Circuit
    stabilizers: list[ObservableEstimate]
    destabilizers: list[ObservableEstimate]


@dataclass
class ClvTrial:
    n: int
    shots: int
    records: list[CliffordRecord] = field(default_factory=list)
    trial: int = 0


@dataclass(frozen=True)
class ClvVerdict:
    individual_stabilizer: bool
    individual_destabilizer: bool
    average_stabilizer: bool
    average_destabilizer: bool

    @property
    def passed(self) -> bool:
        return (self.individual_stabilizer and self.individual_destabilizer
                and self.average_stabilizer and self.average_destabilizer)

    def to_dict(self) -> dict[str, bool]:
        return {
            "individual_stabilizer": self.individual_stabilizer,
            "individual_destabilizer": self.individual_destabilizer,
            "average_stabilizer": self.average_stabilizer,
            "average_destabilizer": self.average_destabilizer,
            "passed": self.passed,
        }


# ------------------------------------------------------------------ circuits

def preparation_circuit(clifford: Circuit) -> Circuit:
    """|0..0> initialization followed by the Clifford, with noise tags."""
    n = clifford.num_qubits
    b = CircuitBuilder(n)
    for q in range(n):
        b.reset(q, noise="init")
    for ins in clifford:
        b.add(ins.gate, ins.qubits, noise="after-2q-gate" if ins.gate is Gate.CNOT else "after-1q-gate")
    return b.build()


def measurement_layer(p: PauliString) -> Circuit:
    """Basis change (X: H; Y: S^dag, H), then an X on every qubit, then readout of all qubits."""
    n = p.n
    b = CircuitBuilder(n)
    for q in range(n):
        if p.x[q] and p.z[q]:
            b.sdg(q, noise="after-1q-gate")
            b.h(q, noise="after-1q-gate")
        elif p.x[q]:
            b.h(q, noise="after-1q-gate")
    for q in range(n):
        b.x(q, noise="after-1q-gate")
    for q in range(n):
        b.measure(q, noise="before-measure")
    return b.build()


def eigenvalues_from_bits(p: PauliString, bits: np.ndarray) -> np.ndarray:
    """+-1 samples of ``p`` from readout bits (shots, n) taken after the X layer."""
    support = p.support()
    parity = (bits[:, support].sum(axis=1) + support.size) % 2  # undo the X layer
    return p.sign * (1 - 2 * parity.astype(np.int64))


# ------------------------------------------------------------------ sampling

def _draw_observables(t: StabilizerTableau, rng: np.random.Generator) -> tuple[list[PauliString], list[PauliString]]:
    n = t.n
    stabs: list[PauliString] = []
    seen: set[bytes] = set()
    distinct = 2**n - 1 >= GROUP
    while len(stabs) < GROUP:
        sel = rng.integers(0, 2, n).astype(bool)
        if not sel.any():
            continue
        key = np.packbits(sel).tobytes()
        if distinct and key in seen:
            continue
        seen.add(key)
        stabs.append(stabilizer_group_element(t, sel))
    destabs: list[PauliString] = []
    dseen: set[tuple[bytes, bytes]] = set()
    while len(destabs) < GROUP:
        d = sample_destabilizer(t, rng)
        key = (d.x.tobytes(), d.z.tobytes())
        if key not in dseen:
            dseen.add(key)
            destabs.append(d)
    return stabs, destabs


def draw_cliffords(n: int, seed: int, trial: int = 0) -> list[tuple[StabilizerTableau, list[PauliString], list[PauliString]]]:
    """Four distinct random Cliffords with their observables (deterministic in the seed)."""
    rng = derive_rng(seed, _STREAM, n, trial)
    out = []
    keys: set[bytes] = set()
    while len(out) < GROUP:
        t = sample_random_clifford(n, rng)
        if t.key() in keys:
            continue
        keys.add(t.key())
        stabs, destabs = _draw_observables(t, rng)
        out.append((t, stabs, destabs))
    return out


def _measure_clifford(args) -> tuple[Circuit, list[float], list[float]]:
    tableau, stabs, destabs, shots, model, seed, n, trial, m = args
    circuit = synthesize_clifford_circuit(tableau)
    prep = preparation_circuit(circuit)
    observables = list(stabs) + list(destabs)
    rng = derive_rng(seed, _STREAM, n, trial, 100 + m)
    group_words = (shots + 63) // 64
    sim = FrameSimulator(n, group_words * 64 * len(observables), rng)
    record = np.zeros((n, sim.words), np.uint64)
    run_instructions(sim, prep.instructions, model, record)
    reference = tableau.copy()
    values = []
    for k, p in enumerate(observables):
        layer = measurement_layer(p)
        words = slice(k * group_words, (k + 1) * group_words)
        run_instructions(sim, layer.instructions, model, record, words)
        ref = reference.copy()
        ref_bits = np.zeros(n, np.uint8)
        for ins in layer:
            if ins.gate is Gate.MEASURE_Z:
                ref_bits[ins.cbit] = ref.measure(ins.qubits[0], forced=0)
            else:
                ref.apply_gate(ins.gate, ins.qubits)
        flips = packed_to_bool(record[:, words], group_words * 64)[:, :shots]
        bits = flips.T ^ ref_bits[None, :].astype(bool)
        values.append(float(eigenvalues_from_bits(p, bits).mean()))
    return circuit, values[:GROUP], values[GROUP:]


def run_clv_trial(n: int, shots: int, model: NoiseModel | None, seed: int, trial: int = 0,
                  workers: int = 1) -> ClvTrial:
    """Measure four stabilizers and four destabilizers of four random Cliffords."""
    if n < 2:
        raise ValueError("the Clifford Volume protocol needs N >= 2")
    if shots < MIN_SHOTS:
        raise ValueError(f"protocol violation: L = {shots} < {MIN_SHOTS} shots per observable")
    drawn = draw_cliffords(n, seed, trial)
    jobs = [(t, s, d, shots, model, seed, n, trial, m) for m, (t, s, d) in enumerate(drawn)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_measure_clifford, jobs))
    else:
        results = [_measure_clifford(j) for j in jobs]
    out = ClvTrial(n, shots, trial=trial)
    for (t, stabs, destabs), (circuit, sv, dv) in zip(drawn, results):
        out.records.append(CliffordRecord(
            t, circuit,
            [ObservableEstimate("stabilizer", p, v, shots) for p, v in zip(stabs, sv)],
            [ObservableEstimate("destabilizer", p, v, shots) for p, v in zip(destabs, dv)],
        ))
    return out


# ---------------------------------------------------------------- evaluation

def evaluate_values(stab_values: Sequence[Sequence[float]], destab_values: Sequence[Sequence[float]],
                    shots: int, aggregate: str = "mean") -> ClvVerdict:
    """Threshold checks on per-Clifford lists of four stabilizer and four destabilizer values."""
    agg = {"mean": mean_sigma, "rms": aggregate_sigma}[aggregate]
    ind_s = ind_d = avg_s = avg_d = True
    for sv, dv in zip(stab_values, destab_values):
        ss = [expectation_sigma(v, shots) for v in sv]
        ds = [expectation_sigma(v, shots) for v in dv]
        ind_s &= all(v - 2 * s >= STAB_THRESHOLD for v, s in zip(sv, ss))
        ind_d &= all(abs(v + 2 * s) <= DESTAB_THRESHOLD and abs(v - 2 * s) <= DESTAB_THRESHOLD
                     for v, s in zip(dv, ds))
        avg_s &= sum(sv) / GROUP - 5 * agg(ss) >= STAB_THRESHOLD
        avg_d &= abs(sum(dv) / GROUP) + 5 * agg(ds) <= DESTAB_THRESHOLD
    return ClvVerdict(bool(ind_s), bool(ind_d), bool(avg_s), bool(avg_d))


def evaluate_clv(trial: ClvTrial, aggregate: str = "mean") -> ClvVerdict:
    return evaluate_values(
        [[e.value for e in r.stabilizers] for r in trial.records],
        [[e.value for e in r.destabilizers] for r in trial.records],
        trial.shots,
        aggregate,
    )


def worst_case(trial: ClvTrial) -> tuple[float, float]:
    """Smallest stabilizer estimate and largest |destabilizer| estimate."""
    s = min(e.value for r in trial.records for e in r.stabilizers)
    d = max(abs(e.value) for r in trial.records for e in r.destabilizers)
    return s, d


# -------------------------------------------------------------------- search

@dataclass
class ClvSearch:
    score: int | None
    trials: list[ClvTrial]
    verdicts: list[ClvVerdict]
    strategy: str
    capped: bool
    aggregate: str = "mean"
    confirmed: bool | None = None  # binary search only: N passed and N + 1 failed on fresh draws


def clv_score(model: NoiseModel | None, shots: int, seed: int, search: str = "linear-up",
              n_min: int = 2, n_max: int = 64, workers: int = 1, aggregate: str = "mean",
              progress=None) -> ClvSearch:
    """Largest N whose trial passes.

    ``linear-up`` steps N upward and stops at the first failure. ``binary``
    bisects on [n_min, n_max] and then confirms the reported N with a fresh
    trial and its failure at N + 1.
    """
    trials: list[ClvTrial] = []
    verdicts: list[ClvVerdict] = []
    cache: dict[tuple[int, int], bool] = {}

    def attempt(n: int, trial: int = 0) -> bool:
        if (n, trial) not in cache:
            t = run_clv_trial(n, shots, model, seed, trial, workers)
            v = evaluate_clv(t, aggregate)
            trials.append(t)
            verdicts.append(v)
            cache[(n, trial)] = v.passed
            if progress:
                progress(n, v.passed)
        return cache[(n, trial)]

    if search == "linear-up":
        score = None
        for n in range(n_min, n_max + 1):
            if not attempt(n):
                break
            score = n
        return ClvSearch(score, trials, verdicts, search, score == n_max, aggregate)
    if search != "binary":
        raise ValueError(f"unknown search strategy {search!r}")
    if not attempt(n_min):
        return ClvSearch(None, trials, verdicts, search, False, aggregate)
    lo, hi = n_min, n_max + 1  # lo passes, hi treated as failing
    if attempt(n_max):
        lo = n_max
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if attempt(mid):
            lo = mid
        else:
            hi = mid
    # confirm with a fresh draw; walk down on a failed confirmation
    score = lo
    while score >= n_min and not attempt(score, trial=1):
        score -= 1
    if score < n_min:
        return ClvSearch(None, trials, verdicts, search, False, aggregate, confirmed=False)
    # a fresh draw at N + 1 must fail as well; the flag records whether it did
    confirmed = score == n_max or not attempt(score + 1, trial=1)
    return ClvSearch(score, trials, verdicts, search, score == n_max, aggregate, confirmed)


def clv_sweep(model: NoiseModel | None, shots: int, seed: int, ns: Sequence[int], workers: int = 1,
              aggregate: str = "mean") -> ClvSearch:
    """One trial at every N in ``ns`` without stopping; the score is the passing prefix."""
    trials, verdicts = [], []
    score = None
    prefix = True
    for n in ns:
        t = run_clv_trial(n, shots, model, seed, 0, workers)
        v = evaluate_clv(t, aggregate)
        trials.append(t)
        verdicts.append(v)
        prefix = prefix and v.passed
        if prefix:
            score = n
    return ClvSearch(score, trials, verdicts, "sweep", bool(ns) and score == ns[-1], aggregate)


# ------------------------------------------------------------------ reporting

def trial_to_dict(trial: ClvTrial, aggregate: str = "mean") -> dict[str, Any]:
    verdict = evaluate_clv(trial, aggregate)
    return {
        "n": trial.n,
        "trial": trial.trial,
        "shots": trial.shots,
        "cliffords": [
            {
                "circuit_sha256": sha256_text(emit_qasm(r.circuit)),
                "gate_counts": r.circuit.gate_counts(),
                "observables": [
                    {"kind": e.kind, "pauli": str(e.pauli), "value": e.value, "sigma": e.sigma}
                    for e in r.stabilizers + r.destabilizers
                ],
            }
            for r in trial.records
        ],
        "verdict": verdict.to_dict(),
    }


def section(result: ClvSearch, shots: int, n_min: int, n_max: int) -> dict[str, Any]:
    return {
        "inputs": {"shots": shots, "search": result.strategy, "n_min": n_min, "n_max": n_max,
                   "aggregate_sigma": result.aggregate},
        "thresholds": {"stabilizer": STAB_THRESHOLD, "destabilizer": DESTAB_THRESHOLD},
        "trials": [trial_to_dict(t, result.aggregate) for t in result.trials],
        "score": result.score,
        "capped": result.capped,
        "confirmed": result.confirmed,
    }


def verify_section(sec: dict[str, Any]) -> list[str]:
    problems = []
    passed_at: dict[int, list[bool]] = {}
    for t in sec["trials"]:
        shots = t["shots"]
        sv = [[o["value"] for o in c["observables"] if o["kind"] == "stabilizer"] for c in t["cliffords"]]
        dv = [[o["value"] for o in c["observables"] if o["kind"] == "destabilizer"] for c in t["cliffords"]]
        v = evaluate_values(sv, dv, shots, sec["inputs"]["aggregate_sigma"]).to_dict()
        if v != t["verdict"]:
            problems.append(f"verdict mismatch at N={t['n']} trial {t['trial']}")
        for c in t["cliffords"]:
            for o in c["observables"]:
                if o["sigma"] != expectation_sigma(o["value"], shots):
                    problems.append(f"sigma mismatch at N={t['n']}")
        passed_at.setdefault(t["n"], []).append(v["passed"])
    score = sec["score"]
    if score is not None:
        if not all(passed_at.get(score, [False])):
            problems.append(f"score {score} has no passing trial record")
        elif (score < sec["inputs"]["n_max"] and sec.get("confirmed") is not False
              and all(passed_at.get(score + 1, [True]))):
            problems.append(f"score {score} lacks a failing record at N={score + 1}")
    elif sec["trials"] and any(all(v) for v in passed_at.values()) and sec["inputs"]["search"] == "linear-up":
        first = min(passed_at)
        if all(passed_at[first]):
            problems.append("null score although the first N passed")
    return problems
