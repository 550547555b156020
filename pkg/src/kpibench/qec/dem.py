"""Detector error model by exhaustive single-fault enumeration.

Every elementary fault of the noise model (each Pauli of each channel, each
readout flip) is injected into its own shot of one deterministic frame run.
The detectors and observable it flips form its signature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ..circuit import Gate
from ..frame import FrameSimulator, Injection, packed_to_bool, parity_rows, run_instructions
from ..noise import NoiseModel
from .experiment import SurgeryExperiment

ONE_QUBIT_PAULIS = [(True, False), (True, True), (False, True)]  # X, Y, Z
TWO_QUBIT_PAULIS = [((ax, bx), (az, bz)) for ax in (0, 1) for az in (0, 1) for bx in (0, 1) for bz in (0, 1)
                    if ax or az or bx or bz]


@dataclass(frozen=True)
class Fault:
    index: int  # instruction index
    probability: float
    injection: tuple[tuple[int, ...], tuple[bool, ...], tuple[bool, ...], str]


def enumerate_faults(exp: SurgeryExperiment, model: NoiseModel) -> Iterator[Fault]:
    for i, ins in enumerate(exp.circuit.instructions):
        if ins.noise is None:
            continue
        p = model.channel_probability(ins.noise)
        if p == 0.0:
            continue
        qs = ins.qubits
        if ins.gate is Gate.MEASURE_Z:
            yield Fault(i, p, (qs, (False,), (False,), "flip"))
        elif ins.noise == "init":
            yield Fault(i, p, (qs, (True,), (False,), "pauli"))
        elif len(qs) == 1:
            for x, z in ONE_QUBIT_PAULIS:
                yield Fault(i, p / 3, (qs, (x,), (z,), "pauli"))
        elif len(qs) == 2:
            for xs, zs in TWO_QUBIT_PAULIS:
                yield Fault(i, p / 15, (qs, tuple(map(bool, xs)), tuple(map(bool, zs)), "pauli"))
        else:
            raise ValueError(f"no fault model for {len(qs)}-qubit noisy instructions")


def fault_signatures(exp: SurgeryExperiment, faults: list[Fault]) -> tuple[np.ndarray, np.ndarray]:
    """(faults, detectors) bool matrix of flipped detectors and (faults,) observable flips."""
    circ = exp.circuit
    f = len(faults)
    sim = FrameSimulator(circ.num_qubits, max(f, 1), randomize=False)
    record = np.zeros((circ.num_clbits, sim.words), np.uint64)
    by_index: dict[int, list[Injection]] = {}
    for k, fault in enumerate(faults):
        qs, xs, zs, kind = fault.injection
        by_index.setdefault(fault.index, []).append(Injection(fault.index, qs, xs, zs, np.array([k]), kind))
    run_instructions(sim, circ.instructions, None, record, injections=by_index)
    dets = packed_to_bool(parity_rows(record, [d.cbits for d in exp.detectors]), sim.shots)[:, :f].T
    obs = packed_to_bool(parity_rows(record, [exp.observable]), sim.shots)[0, :f]
    return dets, obs


def combine(p: float, q: float) -> float:
    """Probability that exactly one of two independent mechanisms fires."""
    return p * (1 - q) + q * (1 - p)


@dataclass
class DetectorGraph:
    """Matching graph over the detectors of one type; node ``num_nodes`` is the boundary."""

    kind: str
    detector_ids: list[int]  # positions in the experiment's detector list
    edges: dict[tuple[int, int], float]  # (u, v) with u < v -> probability
    edge_obs: dict[tuple[int, int], bool]
    hyperedges: int = 0
    undetectable_logical: float = 0.0

    @property
    def num_nodes(self) -> int:
        return len(self.detector_ids)

    @property
    def boundary(self) -> int:
        return self.num_nodes

    def weight(self, e: tuple[int, int], scale: float = 1000.0) -> int:
        p = min(max(self.edges[e], 1e-300), 0.5 - 1e-12)
        return max(1, round(scale * math.log((1 - p) / p)))

    def check_connected(self) -> None:
        adj: dict[int, list[int]] = {}
        for u, v in self.edges:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        seen = {self.boundary}
        stack = [self.boundary]
        while stack:
            for v in adj.get(stack.pop(), ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        missing = [self.detector_ids[v] for v in range(self.num_nodes) if v not in seen]
        if missing:
            raise RuntimeError(f"{len(missing)} {self.kind} detectors are not connected to the boundary "
                               f"(first: {missing[:5]}); the layout or detector definitions are inconsistent")


def _decompose(sig: list[int], edges: dict, boundary: int) -> list[tuple[int, int]] | None:
    """Split a signature into known graph edges (pairs or boundary edges)."""
    if not sig:
        return []
    u, rest = sig[0], sig[1:]
    for j, v in enumerate(rest):
        if (min(u, v), max(u, v)) in edges:
            tail = _decompose(rest[:j] + rest[j + 1:], edges, boundary)
            if tail is not None:
                return [(min(u, v), max(u, v))] + tail
    if (u, boundary) in edges:
        tail = _decompose(rest, edges, boundary)
        if tail is not None:
            return [(u, boundary)] + tail
    return None


def build_graph(exp: SurgeryExperiment, model: NoiseModel, kind: str | None = None) -> DetectorGraph:
    """Graph of the detectors of ``kind`` (the final readout basis by default)."""
    kind = kind or exp.final
    faults = list(enumerate_faults(exp, model))
    dets, obs = fault_signatures(exp, faults)
    ids = [k for k, d in enumerate(exp.detectors) if d.kind == kind]
    local = dets[:, ids]
    boundary = len(ids)
    # probability per (signature, observable) class
    classes: dict[tuple[tuple[int, ...], bool], float] = {}
    for k, fault in enumerate(faults):
        sig = tuple(np.flatnonzero(local[k]).tolist())
        key = (sig, bool(obs[k]))
        classes[key] = combine(classes.get(key, 0.0), fault.probability)
    graph = DetectorGraph(kind, ids, {}, {})
    per_edge: dict[tuple[int, int], dict[bool, float]] = {}
    hyper = []
    for (sig, o), p in classes.items():
        if not sig:
            if o:
                graph.undetectable_logical = combine(graph.undetectable_logical, p)
            continue
        if len(sig) > 2:
            hyper.append((list(sig), o, p))
            continue
        e = (sig[0], boundary) if len(sig) == 1 else (sig[0], sig[1])
        slot = per_edge.setdefault(e, {})
        slot[o] = combine(slot.get(o, 0.0), p)
    for e, slot in per_edge.items():
        graph.edges[e] = combine(slot.get(False, 0.0), slot.get(True, 0.0))
        graph.edge_obs[e] = slot.get(True, 0.0) > slot.get(False, 0.0)
    for sig, o, p in hyper:
        parts = _decompose(sig, graph.edges, boundary)
        if parts is None:  # chain consecutive detectors as a last resort
            parts = [(sig[j], sig[j + 1]) for j in range(0, len(sig) - 1, 2)]
            if len(sig) % 2:
                parts.append((sig[-1], boundary))
            for e in parts:
                if e not in graph.edges:
                    graph.edges[e] = 0.0
                    graph.edge_obs[e] = False
        for e in parts:
            graph.edges[e] = combine(graph.edges[e], p)
        graph.hyperedges += 1
    graph.check_connected()
    return graph
