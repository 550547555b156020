"""Dense statevector simulation with Monte-Carlo Pauli noise.

Amplitudes are held as an n-axis tensor of shape (2,)*n, axis q being qubit q
(qubit 0 is the most significant bit of a basis index). Gates act on views, so
no full-size temporaries are created except for Hadamards.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .circuit import Circuit, Gate, Instruction
from .noise import NoiseModel, bernoulli_positions, sample_pauli_fault

MAX_QUBITS = 26
_SQ2 = 1 / math.sqrt(2)
_PHASES = {
    Gate.S: 1j,
    Gate.SDG: -1j,
    Gate.Z: -1.0,
    Gate.T: complex(math.cos(math.pi / 4), math.sin(math.pi / 4)),
    Gate.TDG: complex(math.cos(math.pi / 4), -math.sin(math.pi / 4)),
}


class CapacityError(ValueError):
    """Requested more qubits than the dense simulator supports."""


class StateVector:
    def __init__(self, num_qubits: int, amplitudes: np.ndarray | None = None):
        if num_qubits > MAX_QUBITS:
            raise CapacityError(f"{num_qubits} qubits exceeds the statevector cap of {MAX_QUBITS}")
        if num_qubits < 1:
            raise ValueError("need at least one qubit")
        self.n = num_qubits
        if amplitudes is None:
            amplitudes = np.zeros((2,) * num_qubits, dtype=np.complex128)
            amplitudes.flat[0] = 1.0
        self.psi = np.asarray(amplitudes, dtype=np.complex128).reshape((2,) * num_qubits)

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.psi.copy())

    @property
    def vector(self) -> np.ndarray:
        return self.psi.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))

    # ---------------------------------------------------------------- kernels
    def _sel(self, fixed: dict[int, int]):
        idx = [slice(None)] * self.n
        for q, v in fixed.items():
            idx[q] = v
        return (Ellipsis, *idx)

    def _flip(self, target: int, controls: dict[int, int]) -> None:
        a = self._sel({**controls, target: 0})
        b = self._sel({**controls, target: 1})
        tmp = self.psi[a].copy()
        self.psi[a] = self.psi[b]
        self.psi[b] = tmp

    def apply_unitary(self, gate: Gate, qubits: Sequence[int], angle: float | None = None) -> "StateVector":
        qs = tuple(qubits)
        for q in qs:
            if not 0 <= q < self.n:
                raise ValueError(f"qubit {q} out of range")
        psi = self.psi
        if gate is Gate.I:
            pass
        elif gate is Gate.H:
            a, b = self._sel({qs[0]: 0}), self._sel({qs[0]: 1})
            lo, hi = psi[a].copy(), psi[b].copy()
            psi[a] = (lo + hi) * _SQ2
            psi[b] = (lo - hi) * _SQ2
        elif gate in _PHASES:
            psi[self._sel({qs[0]: 1})] *= _PHASES[gate]
        elif gate is Gate.RZ:
            psi[self._sel({qs[0]: 0})] *= np.exp(-0.5j * angle)
            psi[self._sel({qs[0]: 1})] *= np.exp(0.5j * angle)
        elif gate is Gate.X:
            self._flip(qs[0], {})
        elif gate is Gate.Y:
            self._flip(qs[0], {})
            psi[self._sel({qs[0]: 0})] *= -1j
            psi[self._sel({qs[0]: 1})] *= 1j
        elif gate is Gate.CNOT:
            self._flip(qs[1], {qs[0]: 1})
        elif gate is Gate.CCX:
            self._flip(qs[2], {qs[0]: 1, qs[1]: 1})
        elif gate is Gate.CZ:
            psi[self._sel({qs[0]: 1, qs[1]: 1})] *= -1
        elif gate is Gate.SWAP:
            a, b = self._sel({qs[0]: 0, qs[1]: 1}), self._sel({qs[0]: 1, qs[1]: 0})
            tmp = psi[a].copy()
            psi[a] = psi[b]
            psi[b] = tmp
        else:
            raise ValueError(f"{gate.name} is not a unitary gate")
        return self

    def apply_pauli(self, qubits: Sequence[int], x: Sequence[bool], z: Sequence[bool]) -> None:
        for q, xb, zb in zip(qubits, x, z):
            if xb and zb:
                self.apply_unitary(Gate.Y, (q,))
            elif xb:
                self.apply_unitary(Gate.X, (q,))
            elif zb:
                self.apply_unitary(Gate.Z, (q,))

    def probabilities(self, qubits: Sequence[int]) -> np.ndarray:
        """Marginal distribution over ``qubits``; index bit order follows the list."""
        qs = list(qubits)
        if len(set(qs)) != len(qs):
            raise ValueError("measured qubits must be distinct")
        for q in qs:
            if not 0 <= q < self.n:
                raise ValueError(f"qubit {q} out of range")
        p = np.abs(self.psi) ** 2
        others = tuple(q for q in range(self.n) if q not in qs)
        marg = p.sum(axis=others) if others else p
        # remaining axes are in increasing qubit order; reorder to the request
        order = sorted(qs)
        marg = np.transpose(marg, [order.index(q) for q in qs])
        marg = marg.reshape(-1)
        return marg / marg.sum()

    def collapse(self, qubits: Sequence[int], bits: Sequence[int]) -> None:
        mask = np.ones(self.psi.shape, dtype=bool)
        for q, b in zip(qubits, bits):
            keep = np.zeros(2, bool)
            keep[b] = True
            shape = [1] * self.n
            shape[q] = 2
            mask &= keep.reshape(shape)
        self.psi[~mask] = 0
        nrm = np.linalg.norm(self.psi)
        if nrm == 0:
            raise ValueError("collapse onto a zero-probability outcome")
        self.psi /= nrm


def apply(state: StateVector, ins: Instruction, model: NoiseModel | None,
          rng: np.random.Generator | None) -> StateVector:
    """Apply one instruction, then the sampled fault of its noise channel."""
    if ins.gate is Gate.MEASURE_Z:
        measure_subset(state, ins.qubits, model if ins.noise else None, rng)
        return state
    if ins.gate is Gate.RESET:
        bit = _born(state, [ins.qubits[0]], rng)[0]
        state.collapse(ins.qubits, [bit])
        if bit:
            state.apply_unitary(Gate.X, ins.qubits)
    else:
        state.apply_unitary(ins.gate, ins.qubits, ins.angle)
    if model is not None and ins.noise and rng is not None:
        fault = sample_pauli_fault(ins.noise, ins.qubits, model, rng)
        if fault is not None:
            state.apply_pauli(ins.qubits, fault.x, fault.z)
    return state


def _born(state: StateVector, qubits: Sequence[int], rng: np.random.Generator | None) -> list[int]:
    probs = state.probabilities(qubits)
    rng = rng if rng is not None else np.random.default_rng()
    k = int(rng.choice(probs.size, p=probs))
    m = len(qubits)
    return [(k >> (m - 1 - j)) & 1 for j in range(m)]


def measure_subset(state: StateVector, qubits: Sequence[int], model: NoiseModel | None,
                   rng: np.random.Generator | None) -> list[int]:
    """Born-rule sample of ``qubits`` (collapsing the state) with readout flips."""
    bits = _born(state, qubits, rng)
    state.collapse(qubits, bits)
    if model is not None and model.p_meas > 0:
        flips = rng.random(len(bits)) < model.p_meas
        bits = [b ^ int(f) for b, f in zip(bits, flips)]
    return bits


def simulate(circuit: Circuit, state: StateVector | None = None) -> StateVector:
    """Noiseless evolution of the unitary part of ``circuit``."""
    state = state or StateVector(circuit.num_qubits)
    for ins in circuit:
        if ins.gate in (Gate.MEASURE_Z, Gate.RESET):
            raise ValueError("simulate() takes unitary circuits; use sample_counts for measurements")
        state.apply_unitary(ins.gate, ins.qubits, ins.angle)
    return state


_BATCH_AMPLITUDES = 1 << 16  # small stacks stay cache-resident


class _Batch(StateVector):
    """Several statevectors on a leading axis, evolved by the same gates."""

    def __init__(self, num_qubits: int, amplitudes: np.ndarray):
        self.n = num_qubits
        self.psi = amplitudes


def _split_terminal_measurements(circuit: Circuit) -> tuple[list[Instruction], list[Instruction]]:
    body = list(circuit.instructions)
    tail: list[Instruction] = []
    while body and body[-1].gate is Gate.MEASURE_Z:
        tail.append(body.pop())
    tail.reverse()
    if any(i.gate in (Gate.MEASURE_Z, Gate.RESET) for i in body):
        raise ValueError("only terminal measurements are supported by the shot sampler")
    if not tail:
        raise ValueError("circuit has no measurements")
    return body, sorted(tail, key=lambda i: i.cbit)


def sample_shots(circuit: Circuit, model: NoiseModel | None, shots: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Outcome bits (shots, num_measured) of a circuit ending in measurements.

    Each shot is an independent noisy trajectory. Fault patterns are drawn for
    all shots first; shots with identical patterns share one simulation, and
    faulty trajectories branch off the noiseless run at their first fault.
    """
    body, tail = _split_terminal_measurements(circuit)
    measured = [i.qubits[0] for i in tail]
    noisy = model is not None and not model.is_noiseless()
    faults: list[list[tuple[int, tuple[bool, ...], tuple[bool, ...]]]] = [[] for _ in range(shots)]
    if noisy:
        for idx, ins in enumerate(body):
            if not ins.noise:
                continue
            p = model.channel_probability(ins.noise)
            pos = bernoulli_positions(shots, p, rng)
            k = len(ins.qubits)
            codes = rng.integers(1, 4**k, pos.size)
            for s, code in zip(pos, codes):
                digits = [(int(code) >> (2 * (k - 1 - j))) & 3 for j in range(k)]
                faults[s].append((idx, tuple(d in (1, 2) for d in digits), tuple(d in (2, 3) for d in digits)))
    groups: dict[tuple, list[int]] = {}
    for s, f in enumerate(faults):
        groups.setdefault(tuple(f), []).append(s)
    out = np.zeros((shots, len(measured)), dtype=np.uint8)
    m = len(measured)
    weights = 1 << np.arange(m - 1, -1, -1)

    def draw(state: StateVector, members: list[int]) -> None:
        probs = state.probabilities(measured)
        ks = rng.choice(probs.size, size=len(members), p=probs)
        out[members] = (ks[:, None] // weights[None, :]) % 2

    ideal = StateVector(circuit.num_qubits)
    done = 0
    if () in groups:
        for ins in body:
            ideal.apply_unitary(ins.gate, ins.qubits, ins.angle)
        draw(ideal, groups.pop(()))
        ideal = StateVector(circuit.num_qubits)
    keys = sorted(groups, key=lambda f: f[0][0])
    batch = max(1, _BATCH_AMPLITUDES >> circuit.num_qubits)
    for c in range(0, len(keys), batch):
        chunk = keys[c:c + batch]
        start = chunk[0][0][0]
        for ins in body[done:start]:
            ideal.apply_unitary(ins.gate, ins.qubits, ins.angle)
        done = start
        # trajectories share every gate; only their faults differ
        stack = _Batch(circuit.num_qubits, np.repeat(ideal.psi[None], len(chunk), axis=0))
        pending = sorted((f[0], k, f[1], f[2]) for k, key in enumerate(chunk) for f in key)
        j = 0
        for idx in range(start, len(body)):
            ins = body[idx]
            stack.apply_unitary(ins.gate, ins.qubits, ins.angle)
            while j < len(pending) and pending[j][0] == idx:
                _, k, fx, fz = pending[j]
                StateVector(circuit.num_qubits, stack.psi[k]).apply_pauli(ins.qubits, fx, fz)
                j += 1
        for k, key in enumerate(chunk):
            draw(StateVector(circuit.num_qubits, stack.psi[k]), groups[key])
    if noisy:
        pm = np.array([model.channel_probability(i.noise) if i.noise else 0.0 for i in tail])
        out ^= (rng.random(out.shape) < pm[None, :]).astype(np.uint8)
    return out


# ----------------------------------------------------------------------- QFT

def qft_circuit(qubits: Sequence[int], num_qubits: int, inverse: bool = False,
                noise: bool = False) -> Circuit:
    """Quantum Fourier transform on ``qubits`` (first entry most significant), no final swaps.

    Controlled phases are compiled to two CNOTs and three RZ rotations (exact
    up to global phase). Without the swaps the output register is bit-reversed.
    """
    one, two = ("after-1q-gate", "after-2q-gate") if noise else (None, None)
    qs = list(qubits)
    ops: list[Instruction] = []

    def cphase(c: int, t: int, phi: float) -> list[Instruction]:
        return [
            Instruction(Gate.RZ, (c,), angle=phi / 2, noise=one),
            Instruction(Gate.RZ, (t,), angle=phi / 2, noise=one),
            Instruction(Gate.CNOT, (c, t), noise=two),
            Instruction(Gate.RZ, (t,), angle=-phi / 2, noise=one),
            Instruction(Gate.CNOT, (c, t), noise=two),
        ]

    for j, q in enumerate(qs):
        ops.append(Instruction(Gate.H, (q,), noise=one))
        for k in range(j + 1, len(qs)):
            ops.extend(cphase(qs[k], q, math.pi / 2 ** (k - j)))
    circ = Circuit(num_qubits, ops)
    return circ.inverse() if inverse else circ
