"""BenchmarkReport model, canonical JSON serialization and self-verification.

Reports are written as canonical JSON: sorted keys, two-space indentation and
floats printed with 17 significant digits, so identical runs give identical
bytes and every float reads back bit-exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import jsonschema

from . import __version__

SCHEMA_VERSION = 1
SECTIONS = ("clv", "ghz", "shor", "qec")


class ReportError(ValueError):
    """Schema violation; ``pointer`` is the JSON pointer of the offending node."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


@dataclass
class BenchmarkReport:
    seed: int
    config: dict[str, Any]
    sections: dict[str, dict[str, Any]] = field(default_factory=dict)
    suite_version: str = __version__
    schema_version: int = SCHEMA_VERSION
    timestamp: str = ""

    def __post_init__(self):
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).replace(microsecond=0).isoformat()

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "suite_version": self.suite_version,
            "timestamp": self.timestamp,
            "seed": self.seed,
            "config": self.config,
            "sections": self.sections,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "BenchmarkReport":
        validate_document(doc)
        return cls(
            seed=doc["seed"],
            config=dict(doc["config"]),
            sections={k: dict(v) for k, v in doc["sections"].items()},
            suite_version=doc["suite_version"],
            schema_version=doc["schema_version"],
            timestamp=doc["timestamp"],
        )


# ------------------------------------------------------------ canonical JSON

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite float {x} cannot be serialized")
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _emit(obj: Any, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(int(obj)))
    elif isinstance(obj, float):
        out.append(_fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, Mapping):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(obj.items())
        for k, (key, val) in enumerate(items):
            if not isinstance(key, str):
                raise TypeError(f"JSON keys must be strings, got {key!r}")
            out.append(f"{pad}  {json.dumps(key, ensure_ascii=False)}: ")
            _emit(val, indent + 1, out)
            out.append(",\n" if k < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for k, val in enumerate(obj):
            out.append(pad + "  ")
            _emit(val, indent + 1, out)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(pad + "]")
    elif hasattr(obj, "item"):  # numpy scalar
        _emit(obj.item(), indent, out)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj: Any) -> str:
    out: list[str] = []
    _emit(obj, 0, out)
    return "".join(out) + "\n"


def canonical_digest(report: BenchmarkReport | Mapping[str, Any]) -> str:
    """sha256 of the canonical form with the timestamp removed."""
    doc = dict(report.to_dict() if isinstance(report, BenchmarkReport) else report)
    doc.pop("timestamp", None)
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


# ------------------------------------------------------------------ schema

def load_schema() -> dict:
    return json.loads(resources.files("kpibench").joinpath("report_schema.json").read_text())


def validate_document(doc: Any) -> None:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        pointer = "".join(f"/{p}" for p in err.absolute_path)
        raise ReportError(err.message, pointer)


def write_report(report: BenchmarkReport, path: str | Path) -> str:
    doc = report.to_dict()
    validate_document(doc)
    text = canonical_json(doc)
    Path(path).write_text(text, encoding="utf-8")
    return text


def read_report(path: str | Path) -> BenchmarkReport:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ReportError(f"invalid JSON: {exc}") from None
    return BenchmarkReport.from_dict(doc)


# ------------------------------------------------------------ verification

def verify_report(report: BenchmarkReport) -> list[str]:
    """Recompute every verdict from stored estimates; return mismatch messages."""
    from . import clv, ghz, qec, shor

    checkers = {"clv": clv.verify_section, "ghz": ghz.verify_section,
                "shor": shor.verify_section, "qec": qec.verify_section}
    problems: list[str] = []
    for name, section in sorted(report.sections.items()):
        for msg in checkers[name](section):
            problems.append(f"{name}: {msg}")
    return problems


# --------------------------------------------------------------------- CSV

def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (_fmt_float(v) if isinstance(v, float) else v) for k, v in row.items()})
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
