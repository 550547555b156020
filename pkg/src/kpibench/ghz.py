"""GHZ-state multipartite entanglement benchmark."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .circuit import Circuit, CircuitBuilder, emit_qasm
from .frame import FrameSimulator, packed_to_bool, positions_to_words, run_instructions, sample_measurements
from .noise import NoiseModel, derive_rng, sample_fault_batch
from .pauli import PauliString, StabilizerTableau, stabilizer_group_element
from .report import sha256_text
from .stats import expectation_sigma

DEFAULT_SHOTS = 8192
THRESHOLD = 0.5
_STREAM = 2


@dataclass
class GhzTrial:
    n: int
    shots: int
    mu: list[float]
    sigmas: list[float]
    f_min: float = field(init=False)
    sigma_f: float = field(init=False)

    def __post_init__(self):
        self.f_min = fidelity_lower_bound(self.mu)
        self.sigma_f = fidelity_sigma(self.sigmas)

    @property
    def passed(self) -> bool:
        return ghz_verdict(self.f_min, self.sigma_f)


@dataclass(frozen=True)
class DfeEstimate:
    epsilon: float
    delta: float
    budget: int
    value: float
    sigma: float


# ----------------------------------------------------------------- circuits

def build_ghz_circuit(n: int, connectivity: str = "all-to-all") -> Circuit:
    """H on qubit 0 and a binary-tree CNOT fan-out of depth ceil(log2 n)."""
    if n < 2:
        raise ValueError("a GHZ state needs at least 2 qubits")
    if connectivity != "all-to-all":
        raise ValueError(f"unsupported connectivity {connectivity!r}")
    b = CircuitBuilder(n)
    b.h(0, noise="after-1q-gate")
    span = 1
    while span < n:
        for c in range(span):
            if c + span < n:
                b.cx(c, c + span, noise="after-2q-gate")
        span *= 2
    return b.build()


def cnot_depth(circuit: Circuit) -> int:
    """Two-qubit layer count under as-soon-as-possible scheduling."""
    ready = [0] * circuit.num_qubits
    for ins in circuit:
        if len(ins.qubits) == 2:
            t = max(ready[q] for q in ins.qubits) + 1
            for q in ins.qubits:
                ready[q] = t
    return max(ready, default=0)


def generators(n: int) -> list[PauliString]:
    """X^N followed by Z_k Z_{k+1}, k = 0..N-2."""
    out = [PauliString(np.ones(n, bool), np.zeros(n, bool))]
    for k in range(n - 1):
        z = np.zeros(n, bool)
        z[k] = z[k + 1] = True
        out.append(PauliString(np.zeros(n, bool), z))
    return out


def preparation(n: int) -> Circuit:
    """Noisy |0..0> initialization followed by the GHZ circuit."""
    b = CircuitBuilder(n)
    for q in range(n):
        b.reset(q, noise="init")
    b.extend(build_ghz_circuit(n).instructions)
    return b.build()


def setting_circuit(n: int, basis: str) -> Circuit:
    b = CircuitBuilder(n)
    b.extend(preparation(n).instructions)
    for q in range(n):
        if basis == "x":
            b.h(q, noise="after-1q-gate")
    for q in range(n):
        b.measure(q, noise="before-measure")
    return b.build()


# --------------------------------------------------------------- estimation

def estimate_generators(n: int, shots: int, model: NoiseModel | None, seed: int,
                        trial: int = 0) -> tuple[list[float], list[float]]:
    """Generator expectations from the all-X and all-Z settings, with sigmas."""
    if shots < 1:
        raise ValueError("shots must be positive")
    xbits = sample_measurements(setting_circuit(n, "x"), model, shots, derive_rng(seed, _STREAM, n, trial, 0))
    zbits = sample_measurements(setting_circuit(n, "z"), model, shots, derive_rng(seed, _STREAM, n, trial, 1))
    mu = [float((1 - 2 * (xbits.sum(axis=1) % 2)).mean())]
    zz = 1 - 2 * (zbits[:, :-1] ^ zbits[:, 1:]).astype(np.int64)
    mu.extend(float(v) for v in zz.mean(axis=0))
    return mu, [expectation_sigma(m, shots) for m in mu]


def fidelity_lower_bound(mu: Sequence[float]) -> float:
    return max(0.0, 1.0 - 0.5 * sum(1.0 - m for m in mu))


def fidelity_sigma(sigmas: Sequence[float]) -> float:
    """Propagated uncertainty of F_min, treating generator estimates as independent."""
    return math.sqrt(0.25 * sum(s * s for s in sigmas))


def ghz_verdict(f_min: float, sigma_f: float) -> bool:
    if sigma_f < 0:
        raise ValueError("sigma must be non-negative")
    return f_min - 3 * sigma_f > THRESHOLD


def run_ghz_trial(n: int, shots: int, model: NoiseModel | None, seed: int, trial: int = 0) -> GhzTrial:
    mu, sig = estimate_generators(n, shots, model, seed, trial)
    return GhzTrial(n, shots, mu, sig)


# ---------------------------------------------------------------------- DFE

def dfe_budget(epsilon: float, delta: float) -> int:
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    return math.ceil(8 * math.log(4 / delta) / epsilon**2)


def pc_budget_scaling(n: int, epsilon: float, delta: float) -> float:
    """N^2 log(1/delta) / eps^2: the order of the P-and-C shot budget (constant omitted)."""
    return n * n * math.log(1 / delta) / epsilon**2


def shadow_overlap_budget(n: int, delta: float) -> int:
    return math.ceil(256 * n * n * math.log(2 / delta))


def ghz_tableau(n: int) -> StabilizerTableau:
    return StabilizerTableau.from_circuit(build_ghz_circuit(n))


def _masked_basis_change(sim: FrameSimulator, q: int, x_mask: np.ndarray, y_mask: np.ndarray,
                         model: NoiseModel | None) -> None:
    # S^dag on the Y shots folds x into z; H on every X or Y shot then swaps the two
    x, z = sim.x[q], sim.z[q]
    z ^= x & y_mask
    h_mask = x_mask | y_mask
    d = (x ^ z) & h_mask
    x ^= d
    z ^= d
    if model is not None and model.p_1q > 0:
        for mask in (y_mask, h_mask):  # one fault draw per gate layer
            pos, fx, fz = sample_fault_batch("after-1q-gate", 1, model, sim.shots, sim.rng)
            keep = ((mask[pos >> 6] >> (pos & 63).astype(np.uint64)) & np.uint64(1)).astype(bool)
            sim.xor_pauli([q], pos[keep], fx[keep], fz[keep])


def dfe_ghz(n: int, epsilon: float, delta: float, model: NoiseModel | None, seed: int) -> DfeEstimate:
    """Direct fidelity estimate: one shot for each of T uniformly drawn stabilizer-group elements."""
    budget = dfe_budget(epsilon, delta)
    rng = derive_rng(seed, _STREAM, n, 1000)
    selectors = rng.integers(0, 2, (budget, n)).astype(bool)
    t = ghz_tableau(n)
    table = np.zeros((budget, n), bool)  # support of each sampled element
    xonly = np.zeros((budget, n), bool)
    ypart = np.zeros((budget, n), bool)
    for k, sel in enumerate(selectors):
        if sel.any():
            p = stabilizer_group_element(t, sel)
            xonly[k] = p.x & ~p.z
            ypart[k] = p.x & p.z
            table[k] = p.x | p.z
    sim = FrameSimulator(n, budget, derive_rng(seed, _STREAM, n, 1001))
    record = np.zeros((n, sim.words), np.uint64)
    run_instructions(sim, preparation(n).instructions, model, record)
    for q in range(n):
        _masked_basis_change(sim, q, positions_to_words(np.flatnonzero(xonly[:, q]), sim.words),
                             positions_to_words(np.flatnonzero(ypart[:, q]), sim.words), model)
    flips = packed_to_bool(sim.x, budget).T  # (budget, n)
    if model is not None and model.p_meas > 0:
        for q in range(n):
            pos, _, _ = sample_fault_batch("before-measure", 1, model, budget, sim.rng)
            flips[pos, q] ^= True
    parity = (flips & table).sum(axis=1) % 2
    eig = 1 - 2 * parity.astype(np.int64)
    value = float(eig.mean())
    sigma = float(eig.std(ddof=1) / math.sqrt(budget)) if budget > 1 else 1.0
    return DfeEstimate(epsilon, delta, budget, value, sigma)


# ------------------------------------------------------------------- search

@dataclass
class GhzSearch:
    score: int | None
    trials: list[GhzTrial]
    capped: bool


def ghz_score(model: NoiseModel | None, shots: int, seed: int, n_min: int = 2, n_max: int = 64,
              progress=None) -> GhzSearch:
    """Add one qubit at a time until the first failure; the score is the last pass."""
    trials = []
    score = None
    for n in range(n_min, n_max + 1):
        t = run_ghz_trial(n, shots, model, seed)
        trials.append(t)
        if progress:
            progress(n, t.passed)
        if not t.passed:
            break
        score = n
    return GhzSearch(score, trials, score == n_max)


# ---------------------------------------------------------------- reporting

def trial_to_dict(t: GhzTrial) -> dict[str, Any]:
    labels = ["X" * t.n] + [f"Z{k}Z{k + 1}" for k in range(t.n - 1)]
    return {
        "n": t.n,
        "shots": t.shots,
        "circuit_sha256": sha256_text(emit_qasm(build_ghz_circuit(t.n))),
        "generators": [{"label": lab, "value": m, "sigma": s} for lab, m, s in zip(labels, t.mu, t.sigmas)],
        "f_min": t.f_min,
        "sigma_f": t.sigma_f,
        "passed": t.passed,
    }


def section(result: GhzSearch, shots: int, n_min: int, n_max: int,
            dfe: DfeEstimate | None = None) -> dict[str, Any]:
    sec: dict[str, Any] = {
        "method": "stabilizer-bound",
        "inputs": {"shots": shots, "n_min": n_min, "n_max": n_max, "connectivity": "all-to-all"},
        "threshold": THRESHOLD,
        "sigma_note": "generator estimates treated as independent",
        "trials": [trial_to_dict(t) for t in result.trials],
        "score": result.score,
        "capped": result.capped,
    }
    if dfe is not None:
        sec["dfe"] = {"epsilon": dfe.epsilon, "delta": dfe.delta, "budget": dfe.budget,
                      "value": dfe.value, "sigma": dfe.sigma}
    return sec


def verify_section(sec: dict[str, Any]) -> list[str]:
    problems = []
    passed = {}
    for t in sec["trials"]:
        mu = [g["value"] for g in t["generators"]]
        sig = [expectation_sigma(m, t["shots"]) for m in mu]
        f = fidelity_lower_bound(mu)
        s = fidelity_sigma(sig)
        if f != t["f_min"] or s != t["sigma_f"]:
            problems.append(f"F_min or sigma mismatch at N={t['n']}")
        if ghz_verdict(f, s) != t["passed"]:
            problems.append(f"verdict mismatch at N={t['n']}")
        passed[t["n"]] = ghz_verdict(f, s)
    expected = None
    for n in sorted(passed):
        if not passed[n]:
            break
        expected = n
    if expected != sec["score"]:
        problems.append(f"score {sec['score']} does not match recomputed {expected}")
    if "dfe" in sec and sec["dfe"]["budget"] != dfe_budget(sec["dfe"]["epsilon"], sec["dfe"]["delta"]):
        problems.append("DFE budget does not match the formula")
    return problems
