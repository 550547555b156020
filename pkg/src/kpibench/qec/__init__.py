"""Bell-state error-correction benefit: physical vs. lattice-surgery logical Bell pairs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from ..noise import NoiseModel
from ..report import sha256_text
from .bell import (
    BASES,
    BellOutcomeTally,
    QScore,
    bell_fidelity_from_tally,
    first_order_infidelity,
    physical_bell_circuit,
    physical_bell_tally,
    pooled_fidelity,
    q_score,
)
from .decoder import UnionFindDecoder
from .dem import DetectorGraph, build_graph
from .experiment import Detector, SurgeryExperiment, build_surgery_experiment, detector_comments
from .layout import SurgeryLayout
from .logical import LogicalBellExperiment, LogicalBellRun, logical_bell_tally, sample_detectors

__all__ = [
    "BASES", "BellOutcomeTally", "Detector", "DetectorGraph", "LogicalBellExperiment", "LogicalBellRun",
    "QScore", "QecResult", "SurgeryExperiment", "SurgeryLayout", "UnionFindDecoder",
    "bell_fidelity_from_tally", "build_graph", "build_surgery_experiment", "detector_comments",
    "first_order_infidelity", "layout_digest", "logical_bell_tally", "physical_bell_circuit",
    "physical_bell_tally", "pooled_fidelity", "q_score", "run_qec", "sample_detectors", "section",
    "verify_section",
]


def layout_digest(layout: SurgeryLayout) -> str:
    doc = {
        "d": layout.d,
        "coordinates": {str(q): list(rc) for q, rc in sorted(layout.coordinates().items())},
        "separate": [[s.kind, s.ancilla, list(s.ordered())] for s in layout.separate],
        "merged": [[s.kind, s.ancilla, list(s.ordered())] for s in layout.merged],
    }
    return sha256_text(json.dumps(doc, sort_keys=True))


@dataclass
class QecResult:
    model: NoiseModel
    scheme: str
    p: float | None
    shots: int
    physical: BellOutcomeTally
    logical: LogicalBellRun
    q: QScore


def run_qec(model: NoiseModel, d: int, shots_per_basis: int, seed: int, scheme: str = "custom",
            p: float | None = None) -> QecResult:
    phys = physical_bell_tally(model, shots_per_basis, seed)
    logical = logical_bell_tally(d, model, shots_per_basis, seed)
    return QecResult(model, scheme, p, shots_per_basis, phys, logical, q_score([phys], logical.tally))


def section(result: QecResult) -> dict[str, Any]:
    layout = SurgeryLayout(result.logical.d)
    rounds = build_surgery_experiment(layout, "Z", noisy=False).rounds
    return {
        "inputs": {"d": layout.d, "scheme": result.scheme, "p": result.p, "shots_per_basis": result.shots,
                   "noise": result.model.to_dict()},
        "decoder": UnionFindDecoder.name,
        "layout_digest": layout_digest(layout),
        "rounds": rounds,
        "physical_pairs": 1,
        "physical": result.physical.to_dict(),
        "logical": result.logical.tally.to_dict(),
        "merge_labels": dict(result.logical.labels),
        "graphs": result.logical.graph_stats,
        "score": result.q.to_dict(),
    }


def verify_section(sec: dict[str, Any]) -> list[str]:
    problems = []
    try:
        phys = BellOutcomeTally.from_dict(sec["physical"])
        logical = BellOutcomeTally.from_dict(sec["logical"])
    except (KeyError, ValueError) as exc:
        return [f"invalid tally: {exc}"]
    q = q_score([phys], logical).to_dict()
    for key, value in q.items():
        if sec["score"].get(key) != value:
            problems.append(f"{key} {sec['score'].get(key)!r} does not match recomputed {value!r}")
    return problems
