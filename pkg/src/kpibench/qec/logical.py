"""Noisy logical Bell-pair runs: detector sampling, decoding and tallies."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..frame import FrameSimulator, packed_to_bool, parity_rows, reference_sample, run_instructions
from ..noise import NoiseModel, derive_rng
from .bell import BASES, BellOutcomeTally
from .decoder import UnionFindDecoder
from .dem import build_graph
from .experiment import SurgeryExperiment, build_surgery_experiment, merge_outcome_cbits
from .layout import SurgeryLayout

_STREAM = 4
DEFAULT_BATCH = 1 << 15


@dataclass
class DetectorRecords:
    """Per-shot detector bits (shots, detectors) and raw observable bits (shots,)."""

    detectors: np.ndarray
    observable: np.ndarray
    merge_outcome: np.ndarray


def _records(exp: SurgeryExperiment, record: np.ndarray, shots: int) -> DetectorRecords:
    ref = reference_sample(exp.circuit).astype(bool)

    def rows(groups):
        flips = packed_to_bool(parity_rows(record, groups), shots)
        refs = np.array([ref[list(g)].sum() % 2 for g in groups], bool)
        return (flips ^ refs[:, None]).T

    dets = rows([d.cbits for d in exp.detectors])
    obs = rows([exp.observable])[:, 0]
    merge = rows([merge_outcome_cbits(exp)])[:, 0]
    return DetectorRecords(dets, obs, merge)


def sample_detectors(experiments: list[SurgeryExperiment], model: NoiseModel | None, shots: int,
                     rng: np.random.Generator) -> list[DetectorRecords]:
    """Sample the shared noisy prefix once and branch into each experiment's suffix.

    All experiments must agree on their first ``prefix_len`` instructions; for a
    single noisy-readout experiment the suffix is empty.
    """
    base = experiments[0]
    circ = base.circuit
    for e in experiments[1:]:
        if e.prefix_len != base.prefix_len or e.circuit.instructions[:e.prefix_len] != circ.instructions[:base.prefix_len]:
            raise ValueError("experiments do not share a common prefix")
    sim = FrameSimulator(circ.num_qubits, shots, rng)
    record = np.zeros((max(e.circuit.num_clbits for e in experiments), sim.words), np.uint64)
    run_instructions(sim, circ.instructions[:base.prefix_len], model, record)
    out = []
    for e in experiments:
        branch = copy.copy(sim)
        branch.x, branch.z = sim.x.copy(), sim.z.copy()
        rec = record.copy()
        run_instructions(branch, e.circuit.instructions[e.prefix_len:], model, rec, start_index=e.prefix_len)
        out.append(_records(e, rec[:e.circuit.num_clbits], shots))
    return out


@dataclass
class LogicalBellRun:
    """Decoded Bell tally for one code distance and noise model."""

    d: int
    tally: BellOutcomeTally
    labels: dict[str, int] = field(default_factory=lambda: {"Phi+": 0, "Psi+": 0})
    graph_stats: dict[str, dict[str, float]] = field(default_factory=dict)


class LogicalBellExperiment:
    """Circuits, detector graphs and decoders for the four readout variants; built once."""

    def __init__(self, d: int, model: NoiseModel):
        self.d = d
        self.model = model
        self.layout = SurgeryLayout(d)
        self.experiments = {
            "X": build_surgery_experiment(self.layout, "X"),
            "Z": build_surgery_experiment(self.layout, "Z"),
            "YX": build_surgery_experiment(self.layout, "X", perfect=True),
            "YZ": build_surgery_experiment(self.layout, "Z", perfect=True),
        }

    @cached_property
    def decoders(self) -> dict[str, UnionFindDecoder]:
        return {k: UnionFindDecoder(build_graph(e, self.model)) for k, e in self.experiments.items()}

    def residual(self, key: str, rec: DetectorRecords) -> np.ndarray:
        """Observable error left after decoding, per shot."""
        dec = self.decoders[key]
        syndromes = rec.detectors[:, dec.graph.detector_ids]
        return rec.observable ^ dec.decode_batch(syndromes)

    def run(self, shots_per_basis: int, seed: int, batch: int = DEFAULT_BATCH) -> LogicalBellRun:
        if shots_per_basis < 1:
            raise ValueError("shots must be positive")
        result = LogicalBellRun(self.d, BellOutcomeTally())
        for k, basis in enumerate(BASES):
            done = chunk = 0
            while done < shots_per_basis:
                n = min(batch, shots_per_basis - done)
                rng = derive_rng(seed, _STREAM, self.d, k, chunk)
                if basis == "Y":
                    rx, rz = sample_detectors([self.experiments["YX"], self.experiments["YZ"]], self.model, n, rng)
                    err = self.residual("YX", rx) ^ self.residual("YZ", rz)
                    merge = rz.merge_outcome
                else:
                    (rec,) = sample_detectors([self.experiments[basis]], self.model, n, rng)
                    err = self.residual(basis, rec)
                    merge = rec.merge_outcome
                result.tally.add_errors(basis, err)
                if basis == "Z":
                    result.labels["Psi+"] += int(merge.sum())
                    result.labels["Phi+"] += int(n - merge.sum())
                done += n
                chunk += 1
        result.graph_stats = {
            k: {"nodes": dec.graph.num_nodes, "edges": len(dec.graph.edges), "hyperedges": dec.graph.hyperedges,
                "undetectable_logical": dec.graph.undetectable_logical}
            for k, dec in self.decoders.items()
        }
        return result


def logical_bell_tally(d: int, model: NoiseModel, shots_per_basis: int, seed: int,
                       batch: int = DEFAULT_BATCH) -> LogicalBellRun:
    return LogicalBellExperiment(d, model).run(shots_per_basis, seed, batch)
