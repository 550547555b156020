"""Lattice-surgery Bell-pair circuits with detector and observable annotations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..circuit import Circuit, CircuitBuilder, Gate
from .layout import Stabilizer, SurgeryLayout


@dataclass(frozen=True)
class Detector:
    kind: str  # "X" or "Z": the stabilizer type whose outcomes it compares
    cbits: tuple[int, ...]
    label: str


@dataclass
class SurgeryExperiment:
    """One readout variant of the merge-and-split protocol.

    ``final`` is the basis of the transversal data readout. When ``perfect``
    is set that readout is noiseless and happens after the last noisy round;
    the instructions from ``prefix_len`` on form this noiseless suffix.
    """

    layout: SurgeryLayout
    final: str
    perfect: bool
    circuit: Circuit
    detectors: list[Detector]
    observable: tuple[int, ...]
    prefix_len: int
    rounds: list[str] = field(default_factory=list)

    def detectors_of(self, kind: str) -> list[Detector]:
        return [det for det in self.detectors if det.kind == kind]


class _RoundBuilder:
    def __init__(self, n: int, noisy: bool):
        self.b = CircuitBuilder(n)
        self.noisy = noisy

    def tag(self, kind: str) -> str | None:
        return kind if self.noisy else None

    def idle(self, qubits: Iterable[int], kind: str = "idle") -> None:
        if self.noisy:
            for q in sorted(qubits):
                self.b.add(Gate.I, (q,), noise=kind)

    def reset_layer(self, qubits: Sequence[int]) -> None:
        for q in qubits:
            self.b.reset(q, noise=self.tag("init"))

    def round(self, stabs: Sequence[Stabilizer], active_data: Iterable[int], *,
              h_first: Sequence[int] = (), h_last: Sequence[int] = (), measure: Sequence[int] = (),
              reset_after: Sequence[int] = ()) -> tuple[dict[int, int], dict[int, int]]:
        """One syndrome-extraction round ending in a combined measure-and-reset layer.

        Ancillas are assumed freshly reset. ``reset_after`` lists the qubits to
        reset in the closing layer (the next round's ancillas, say). Returns
        the cbits of the ancillas and of the extra measured qubits.
        """
        b = self.b
        ancillas = [s.ancilla for s in stabs]
        x_anc = [s.ancilla for s in stabs if s.kind == "X"]
        active = set(active_data) | set(ancillas)
        for q in x_anc + list(h_first):
            b.h(q, noise=self.tag("after-1q-gate"))
        self.idle(active - set(x_anc) - set(h_first))
        for k in range(4):
            busy = set()
            for s in stabs:
                q = s.ordered()[k]
                if q is None:
                    continue
                if s.kind == "X":
                    b.cx(s.ancilla, q, noise=self.tag("after-2q-gate"))
                else:
                    b.cx(q, s.ancilla, noise=self.tag("after-2q-gate"))
                busy |= {q, s.ancilla}
            self.idle(active - busy)
        for q in x_anc + list(h_last):
            b.h(q, noise=self.tag("after-1q-gate"))
        self.idle(active - set(x_anc) - set(h_last))
        anc_bits = {q: b.measure(q, noise=self.tag("before-measure")) for q in ancillas}
        data_bits = {q: b.measure(q, noise=self.tag("before-measure")) for q in measure}
        self.reset_layer(reset_after)
        self.idle(active - set(ancillas) - set(measure) - set(reset_after), "resonator-idle")
        return anc_bits, data_bits


def build_surgery_experiment(layout: SurgeryLayout, final: str, perfect: bool = False,
                             noisy: bool = True) -> SurgeryExperiment:
    """Circuit, detectors and observable for final readout in basis ``final`` ("X" or "Z")."""
    if final not in ("X", "Z"):
        raise ValueError(f"final readout basis must be X or Z, got {final!r}")
    d = layout.d
    rb = _RoundBuilder(layout.num_qubits, noisy)
    dets: list[Detector] = []
    patch = layout.all_patch_data
    seam = layout.seam_data
    new = {s.ancilla for s in layout.new_in_merge}
    ext = {s.ancilla: s for s in layout.extended_in_merge}
    rounds = []

    sep_anc = [s.ancilla for s in layout.separate]
    merged_anc = [s.ancilla for s in layout.merged]

    # 1. |+> on both patches and one round over the separate layout
    rb.reset_layer(patch + sep_anc)
    prev, _ = rb.round(layout.separate, patch, h_first=patch, reset_after=merged_anc + seam)
    rounds.append("init")
    for s in layout.separate:
        if s.kind == "X":
            dets.append(Detector("X", (prev[s.ancilla],), f"init:{s.corner}"))

    # 2. merge: d rounds over the merged layout, seam qubits prepared in |+>
    merge_first: dict[int, int] = {}
    seam_bits: dict[int, int] = {}
    for k in range(d):
        last = k == d - 1
        cur, extra = rb.round(layout.merged, patch + seam, h_first=seam if k == 0 else (),
                              h_last=seam if last else (), measure=seam if last else (),
                              reset_after=sep_anc if last else merged_anc)
        rounds.append(f"merge{k + 1}")
        for s in layout.merged:
            a = s.ancilla
            if k == 0 and a in new:
                merge_first[a] = cur[a]
                continue
            dets.append(Detector(s.kind, (cur[a], prev[a]), f"merge{k + 1}:{s.corner}"))
        prev = cur
        seam_bits = extra

    # 3. split: seam read out in X above; one round over the separate layout
    readout = not perfect
    cur, data_bits = rb.round(layout.separate, patch,
                              h_last=patch if (readout and final == "X") else (),
                              measure=patch if readout else ())
    rounds.append("split")
    for s in layout.separate:
        a = s.ancilla
        bits = (cur[a], prev[a])
        if a in ext:
            bits += tuple(seam_bits[q] for q in ext[a].data if q in seam_bits)
        dets.append(Detector(s.kind, bits, f"split:{s.corner}"))
    prefix_len = len(rb.b.instructions)

    # 4. transversal readout (noiseless suffix when perfect)
    if perfect:
        clean = _RoundBuilder(layout.num_qubits, False)
        clean.b = rb.b
        if final == "X":
            for q in patch:
                clean.b.h(q)
        data_bits = {q: clean.b.measure(q) for q in patch}
    for s in layout.separate:
        if s.kind == final:
            bits = tuple(data_bits[q] for q in s.data) + (cur[s.ancilla],)
            dets.append(Detector(final, bits, f"final:{s.corner}"))
    if final == "Z":
        obs = [data_bits[q] for q in layout.logical_z(0) + layout.logical_z(1)] + sorted(merge_first.values())
    else:
        obs = [data_bits[q] for q in layout.logical_x(0) + layout.logical_x(1)] + [seam_bits[layout.seam_row0]]
    return SurgeryExperiment(layout, final, perfect, rb.b.build(), dets, tuple(obs), prefix_len, rounds)


def merge_outcome_cbits(exp: SurgeryExperiment) -> tuple[int, ...]:
    """Records whose parity is the raw Z-bar Z-bar merge outcome (first merge round)."""
    new = {s.ancilla for s in exp.layout.new_in_merge}
    ms = [i for i in exp.circuit if i.gate is Gate.MEASURE_Z]
    n_sep = len(exp.layout.separate)
    first_merge = ms[n_sep:n_sep + len(exp.layout.merged)]
    return tuple(i.cbit for i in first_merge if i.qubits[0] in new)


def detector_comments(exp: SurgeryExperiment) -> str:
    lines = [f"// detector {k} {det.kind} {det.label}: rec {' '.join(map(str, det.cbits))}"
             for k, det in enumerate(exp.detectors)]
    lines.append(f"// observable {exp.final}: rec {' '.join(map(str, exp.observable))}")
    return "\n".join(lines) + "\n"
