"""Batched Pauli-frame sampling of noisy Clifford circuits.

A noiseless reference run on the tableau fixes one valid outcome record; each
shot then tracks only the Pauli frame by which it differs from the reference.
Frames are stored one bit per shot, packed into 64-bit words along the shot
axis, so every gate is a handful of word-wide XORs regardless of shot count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import Circuit, Gate
from .noise import NoiseModel, sample_fault_batch
from .pauli import StabilizerTableau

_ONE = np.uint64(1)


def _words(shots: int) -> int:
    return (shots + 63) // 64


def positions_to_words(pos: np.ndarray, words: int) -> np.ndarray:
    """Packed mask with the given shot indices set (indices must be unique)."""
    out = np.zeros(words, np.uint64)
    if pos.size:
        np.bitwise_or.at(out, pos >> 6, _ONE << (pos & 63).astype(np.uint64))
    return out


def packed_to_bool(packed: np.ndarray, shots: int) -> np.ndarray:
    """(rows, W) uint64 -> (rows, shots) bool."""
    raw = np.ascontiguousarray(packed).view(np.uint8)
    return np.unpackbits(raw, axis=-1, bitorder="little")[..., :shots].astype(bool)


def bool_to_packed(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, bool)
    shots = bits.shape[-1]
    pad = np.zeros(bits.shape[:-1] + (_words(shots) * 64,), bool)
    pad[..., :shots] = bits
    return np.packbits(pad, axis=-1, bitorder="little").view(np.uint64)


def reference_sample(circuit: Circuit) -> np.ndarray:
    """Outcome bits of one noiseless run with every random outcome forced to 0."""
    t = StabilizerTableau.identity(circuit.num_qubits)
    out = np.zeros(circuit.num_clbits, dtype=np.uint8)
    for ins in circuit:
        if ins.gate is Gate.MEASURE_Z:
            out[ins.cbit] = t.measure(ins.qubits[0], forced=0)
        elif ins.gate is Gate.RESET:
            if t.measure(ins.qubits[0], forced=0):
                t.apply_gate(Gate.X, ins.qubits)
        else:
            t.apply_gate(ins.gate, ins.qubits)
    return out


class FrameSimulator:
    """Pauli frames for ``shots`` independent runs of an n-qubit circuit."""

    def __init__(self, n: int, shots: int, rng: np.random.Generator | None = None, randomize: bool = True):
        self.n = n
        self.shots = shots
        self.words = _words(shots)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.randomize = randomize
        self.x = np.zeros((n, self.words), np.uint64)
        self.z = np.zeros((n, self.words), np.uint64)
        self._tail = self._tail_mask()
        if randomize:
            for q in range(n):
                self.z[q] = self._random_word()

    def _tail_mask(self) -> np.ndarray:
        mask = np.full(self.words, np.iinfo(np.uint64).max, np.uint64)
        extra = self.words * 64 - self.shots
        if extra:
            mask[-1] = np.uint64((1 << (64 - extra)) - 1)
        return mask

    def _random_word(self) -> np.ndarray:
        return self.rng.integers(0, 2**64, self.words, dtype=np.uint64, endpoint=False) & self._tail

    # ------------------------------------------------------------------ gates
    def apply(self, gate: Gate, qubits: Sequence[int], sl: slice = slice(None)) -> None:
        x, z = self.x, self.z
        if gate in (Gate.X, Gate.Y, Gate.Z, Gate.I):
            return
        if gate is Gate.H:
            (q,) = qubits
            x[q, sl], z[q, sl] = z[q, sl].copy(), x[q, sl].copy()
        elif gate in (Gate.S, Gate.SDG):
            (q,) = qubits
            z[q, sl] ^= x[q, sl]
        elif gate is Gate.CNOT:
            c, t = qubits
            x[t, sl] ^= x[c, sl]
            z[c, sl] ^= z[t, sl]
        elif gate is Gate.CZ:
            a, b = qubits
            z[a, sl] ^= x[b, sl]
            z[b, sl] ^= x[a, sl]
        elif gate is Gate.SWAP:
            a, b = qubits
            x[[a, b], sl] = x[[b, a], sl]
            z[[a, b], sl] = z[[b, a], sl]
        else:
            raise ValueError(f"{gate.name} cannot be frame-simulated")

    def xor_pauli(self, qubits: Sequence[int], pos: np.ndarray, xs: np.ndarray, zs: np.ndarray) -> None:
        """Multiply Pauli ``(xs[j], zs[j])`` on ``qubits`` into the frame of shot ``pos[j]``."""
        if pos.size == 0:
            return
        w = pos >> 6
        bit = _ONE << (pos & 63).astype(np.uint64)
        for j, q in enumerate(qubits):
            if xs[:, j].any():
                np.bitwise_xor.at(self.x[q], w[xs[:, j]], bit[xs[:, j]])
            if zs[:, j].any():
                np.bitwise_xor.at(self.z[q], w[zs[:, j]], bit[zs[:, j]])


@dataclass
class Injection:
    """Deterministic fault: after instruction ``index``, apply a Pauli to ``shots``.

    ``kind`` is "pauli" (``x``/``z`` bits over ``qubits``) or "flip" (the
    measurement record written by that instruction is inverted).
    """

    index: int
    qubits: tuple[int, ...]
    x: tuple[bool, ...]
    z: tuple[bool, ...]
    shots: np.ndarray
    kind: str = "pauli"


def run_instructions(sim: FrameSimulator, instructions: Sequence, model: NoiseModel | None,
                     record: np.ndarray, words: slice = slice(None), start_index: int = 0,
                     injections: dict[int, list[Injection]] | None = None) -> None:
    """Advance ``sim`` through ``instructions`` on the shots in ``words``.

    Sampled faults and measurement flips are written only inside that word
    range; ``record`` rows are indexed by classical bit.
    """
    lo = (words.start or 0) * 64
    hi = sim.shots if words.stop is None else min(sim.shots, words.stop * 64)
    span = hi - lo
    noisy = model is not None and not model.is_noiseless()
    sub_words = (span + 63) // 64
    for offset, ins in enumerate(instructions):
        i = start_index + offset
        g, qs = ins.gate, ins.qubits
        if g is Gate.MEASURE_Z:
            flips = sim.x[qs[0], words].copy()
            if sim.randomize:
                sim.z[qs[0], words] ^= sim._random_word()[words]
            if noisy and ins.noise:
                pos, _, _ = sample_fault_batch(ins.noise, 1, model, span, sim.rng)
                flips ^= positions_to_words(pos, sub_words)
            record[ins.cbit, words] = flips
        elif g is Gate.RESET:
            sim.x[qs[0], words] = 0
            sim.z[qs[0], words] = sim._random_word()[words] if sim.randomize else 0
        else:
            sim.apply(g, qs, words)
        if noisy and ins.noise and g is not Gate.MEASURE_Z:
            pos, fx, fz = sample_fault_batch(ins.noise, len(qs), model, span, sim.rng)
            sim.xor_pauli(qs, pos + lo, fx, fz)
        for inj in (injections or {}).get(i, ()):
            if inj.kind == "flip":
                if g is not Gate.MEASURE_Z:
                    raise ValueError("flip injection on a non-measurement instruction")
                record[ins.cbit] ^= positions_to_words(inj.shots, sim.words)
            else:
                k = len(inj.qubits)
                xs = np.broadcast_to(np.array(inj.x, bool), (inj.shots.size, k))
                zs = np.broadcast_to(np.array(inj.z, bool), (inj.shots.size, k))
                sim.xor_pauli(inj.qubits, inj.shots, xs, zs)


def simulate_frames(circuit: Circuit, model: NoiseModel | None, shots: int, rng: np.random.Generator,
                    injections: Sequence[Injection] = (), randomize: bool = True) -> np.ndarray:
    """Packed measurement-flip record of shape (num_clbits, words).

    Outcome bits are ``reference_sample(circuit)`` XOR these flips.
    """
    sim = FrameSimulator(circuit.num_qubits, shots, rng, randomize=randomize)
    record = np.zeros((circuit.num_clbits, sim.words), np.uint64)
    by_index: dict[int, list[Injection]] = {}
    for inj in injections:
        by_index.setdefault(inj.index, []).append(inj)
    run_instructions(sim, circuit.instructions, model, record, injections=by_index)
    return record


def sample_measurements(circuit: Circuit, model: NoiseModel | None, shots: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Noisy outcome bits, shape (shots, num_clbits)."""
    ref = reference_sample(circuit)
    flips = simulate_frames(circuit, model, shots, rng)
    return (packed_to_bool(flips, shots) ^ ref[:, None].astype(bool)).T


def parity_rows(record: np.ndarray, rows: Sequence[Sequence[int]]) -> np.ndarray:
    """XOR of selected packed rows for each group, shape (len(rows), words)."""
    out = np.zeros((len(rows), record.shape[1]), np.uint64)
    for k, group in enumerate(rows):
        for r in group:
            out[k] ^= record[r]
    return out
