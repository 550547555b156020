"""Bell-pair correlation tallies, the three-basis fidelity estimator and Q."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from ..circuit import Circuit, CircuitBuilder
from ..frame import Injection, sample_measurements, simulate_frames
from ..noise import NoiseModel, derive_rng
from ..stats import Estimate
from .dem import ONE_QUBIT_PAULIS, TWO_QUBIT_PAULIS

BASES = ("X", "Y", "Z")
LABELS = ("Phi+", "Phi-", "Psi+", "Psi-")
# Expected parity of the two outcome bits, (1 - <PP>) / 2, per target state and basis.
_PARITY = {
    "Phi+": {"X": 0, "Y": 1, "Z": 0},
    "Phi-": {"X": 1, "Y": 0, "Z": 0},
    "Psi+": {"X": 0, "Y": 0, "Z": 1},
    "Psi-": {"X": 1, "Y": 1, "Z": 1},
}
_STREAM = 4


def expected_parity(target: str, basis: str) -> int:
    return _PARITY[target][basis]


@dataclass
class BellOutcomeTally:
    shots: dict[str, int] = field(default_factory=lambda: dict.fromkeys(BASES, 0))
    errors: dict[str, int] = field(default_factory=lambda: dict.fromkeys(BASES, 0))
    target: str = "Phi+"

    def __post_init__(self):
        if self.target not in LABELS:
            raise ValueError(f"unknown Bell label {self.target!r}")
        for b in BASES:
            if not 0 <= self.errors[b] <= self.shots[b]:
                raise ValueError(f"basis {b}: {self.errors[b]} errors in {self.shots[b]} shots")

    def add(self, basis: str, bits_a: np.ndarray, bits_b: np.ndarray) -> None:
        """Tally outcome pairs measured in ``basis`` against the target's correlation."""
        wrong = (np.asarray(bits_a, bool) ^ np.asarray(bits_b, bool)) != bool(expected_parity(self.target, basis))
        self.add_errors(basis, wrong)

    def add_errors(self, basis: str, wrong: np.ndarray) -> None:
        self.shots[basis] += int(wrong.size)
        self.errors[basis] += int(np.count_nonzero(wrong))

    def rate(self, basis: str) -> float:
        return self.errors[basis] / self.shots[basis]

    def to_dict(self) -> dict[str, Any]:
        return {"target": self.target, "shots": dict(self.shots), "errors": dict(self.errors)}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "BellOutcomeTally":
        return cls(dict(doc["shots"]), dict(doc["errors"]), doc["target"])


def bell_fidelity_from_tally(t: BellOutcomeTally) -> Estimate:
    """F = 1 - (1/2) sum_b N_err,b / N_b, with binomial error propagation."""
    if any(t.shots[b] == 0 for b in BASES):
        raise ValueError("every basis needs at least one shot")
    rates = [t.rate(b) for b in BASES]
    var = 0.25 * sum(q * (1 - q) / t.shots[b] for q, b in zip(rates, BASES))
    # exact rational arithmetic, rounded once
    value = float(1 - sum(Fraction(t.errors[b], 2 * t.shots[b]) for b in BASES))
    return Estimate(value, math.sqrt(var), sum(t.shots.values()), "bell-three-basis")


def pooled_fidelity(total_errors: int, total_shots: int) -> float:
    """The equal-count form 1 - (3/2) errors / shots, correctly rounded."""
    return float(1 - Fraction(3 * total_errors, 2 * total_shots))


# ------------------------------------------------------------ physical pair

def physical_bell_circuit(basis: str) -> Circuit:
    """Noisy |00> -> H(0) -> CNOT -> basis change -> readout on two qubits."""
    if basis not in BASES:
        raise ValueError(f"basis must be one of {BASES}")
    b = CircuitBuilder(2)
    b.reset(0, noise="init")
    b.reset(1, noise="init")
    b.h(0, noise="after-1q-gate")
    b.idle(1)
    b.cx(0, 1, noise="after-2q-gate")
    for q in (0, 1):
        if basis == "Y":
            b.sdg(q, noise="after-1q-gate")
        if basis in ("X", "Y"):
            b.h(q, noise="after-1q-gate")
    for q in (0, 1):
        b.measure(q, noise="before-measure")
    return b.build()


def physical_bell_tally(model: NoiseModel | None, shots_per_basis: int, seed: int,
                        batch: int = 1 << 20) -> BellOutcomeTally:
    if shots_per_basis < 1:
        raise ValueError("shots must be positive")
    tally = BellOutcomeTally()
    for k, basis in enumerate(BASES):
        circ = physical_bell_circuit(basis)
        done = 0
        chunk = 0
        while done < shots_per_basis:
            n = min(batch, shots_per_basis - done)
            bits = sample_measurements(circ, model, n, derive_rng(seed, _STREAM, 0, k, chunk))
            tally.add(basis, bits[:, 0], bits[:, 1])
            done += n
            chunk += 1
    return tally


def first_order_infidelity(model: NoiseModel) -> float:
    """Leading-order 1 - F of the physical estimator, by enumerating single faults."""
    total = 0.0
    for basis in BASES:
        circ = physical_bell_circuit(basis)
        for i, ins in enumerate(circ.instructions):
            if ins.noise is None:
                continue
            p = model.channel_probability(ins.noise)
            if ins.noise in ("init", "before-measure"):
                options = [(p, (True,) * len(ins.qubits), (False,) * len(ins.qubits))]
            elif len(ins.qubits) == 1:
                options = [(p / 3, (x,), (z,)) for x, z in ONE_QUBIT_PAULIS]
            else:
                options = [(p / 15, tuple(map(bool, xs)), tuple(map(bool, zs))) for xs, zs in TWO_QUBIT_PAULIS]
            for prob, xs, zs in options:
                total += 0.5 * prob * _flips_parity(circ, i, ins, xs, zs)
    return total


def _flips_parity(circ: Circuit, index: int, ins, xs, zs) -> bool:
    if ins.noise == "before-measure":
        return True  # a flipped bit toggles the pair parity
    rec = simulate_frames(circ, None, 1, np.random.default_rng(0),
                          [Injection(index, ins.qubits, xs, zs, np.array([0]))], randomize=False)
    return bool((rec[0, 0] ^ rec[1, 0]) & np.uint64(1))


# ------------------------------------------------------------------ Q score

@dataclass(frozen=True)
class QScore:
    physical: Estimate
    logical: Estimate
    value: float | None
    sigma: float | None
    unbounded: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "f_physical": self.physical.value,
            "f_physical_sigma": self.physical.sigma,
            "f_logical": self.logical.value,
            "f_logical_sigma": self.logical.sigma,
            "q": self.value,
            "q_sigma": self.sigma,
            "unbounded": self.unbounded,
        }


def q_score(physical: Sequence[BellOutcomeTally], logical: BellOutcomeTally) -> QScore:
    """(1 - max F_phys) / (1 - F_logical); unbounded when the logical infidelity is within 1 sigma of 0."""
    if not physical:
        raise ValueError("need at least one physical tally")
    best = max((bell_fidelity_from_tally(t) for t in physical), key=lambda e: e.value)
    fl = bell_fidelity_from_tally(logical)
    num, den = 1.0 - best.value, 1.0 - fl.value
    if den <= fl.sigma:
        return QScore(best, fl, None, None, True)
    q = num / den
    rel = math.hypot(best.sigma / num if num > 0 else 0.0, fl.sigma / den)
    return QScore(best, fl, q, q * rel, False)
