"""Gate-level circuit representation and OpenQASM 2.0 import/export.

Every benchmark builds its circuits as :class:`Circuit` values. Noise is carried
as a per-instruction tag naming the channel that acts after (or, for
measurements, on) the instruction; tags are metadata only and are written to
QASM as trailing comments so exported files run unchanged on hardware.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class Gate(str, Enum):
    H = "h"
    S = "s"
    SDG = "sdg"
    X = "x"
    Y = "y"
    Z = "z"
    T = "t"
    TDG = "tdg"
    I = "id"
    RZ = "rz"
    CNOT = "cx"
    CZ = "cz"
    SWAP = "swap"
    CCX = "ccx"
    MEASURE_Z = "measure"
    RESET = "reset"


ARITY = {
    Gate.CNOT: 2,
    Gate.CZ: 2,
    Gate.SWAP: 2,
    Gate.CCX: 3,
}

CLIFFORD_GATES = frozenset(
    {Gate.H, Gate.S, Gate.SDG, Gate.X, Gate.Y, Gate.Z, Gate.I, Gate.CNOT, Gate.CZ, Gate.SWAP}
)

# Channel kinds a noise tag may name; see kpibench.noise for their semantics.
NOISE_CHANNELS = (
    "after-1q-gate",
    "after-2q-gate",
    "init",
    "before-measure",
    "idle",
    "resonator-idle",
)


def arity(gate: Gate) -> int:
    return ARITY.get(gate, 1)


@dataclass(frozen=True)
class Instruction:
    gate: Gate
    qubits: tuple[int, ...]
    angle: float | None = None
    cbit: int | None = None
    noise: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "gate", Gate(self.gate))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != arity(self.gate):
            raise ValueError(f"{self.gate.name} acts on {arity(self.gate)} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit index in {self.gate.name}{self.qubits}")
        if self.gate is Gate.RZ:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError("RZ needs a finite angle")
        elif self.angle is not None:
            raise ValueError(f"{self.gate.name} takes no angle")
        if (self.gate is Gate.MEASURE_Z) != (self.cbit is not None):
            raise ValueError("exactly the MEASURE_Z instructions carry a classical bit")
        if self.noise is not None and self.noise not in NOISE_CHANNELS:
            raise ValueError(f"unknown noise channel {self.noise!r}")


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    instructions: tuple[Instruction, ...] = ()
    num_clbits: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if self.num_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        seen = set()
        top = 0
        for ins in self.instructions:
            for q in ins.qubits:
                if not 0 <= q < self.num_qubits:
                    raise ValueError(f"qubit index {q} out of range for {self.num_qubits} qubits")
            if ins.cbit is not None:
                if ins.cbit in seen:
                    raise ValueError(f"classical bit {ins.cbit} written twice")
                seen.add(ins.cbit)
                top = max(top, ins.cbit + 1)
        object.__setattr__(self, "num_clbits", max(self.num_clbits, top))

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    def count(self, gate: Gate) -> int:
        return sum(1 for ins in self.instructions if ins.gate is gate)

    def gate_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for ins in self.instructions:
            counts[ins.gate.name] = counts.get(ins.gate.name, 0) + 1
        return counts

    def measured_qubits(self) -> list[int]:
        """Qubits in classical-bit order."""
        pairs = sorted((ins.cbit, ins.qubits[0]) for ins in self.instructions if ins.gate is Gate.MEASURE_Z)
        return [q for _, q in pairs]

    def then(self, other: "Circuit") -> "Circuit":
        """Concatenate; classical bits of ``other`` are shifted past ours."""
        n = max(self.num_qubits, other.num_qubits)
        shift = self.num_clbits
        tail = [
            Instruction(i.gate, i.qubits, i.angle, None if i.cbit is None else i.cbit + shift, i.noise)
            for i in other.instructions
        ]
        return Circuit(n, self.instructions + tuple(tail))

    def inverse(self) -> "Circuit":
        inv = {Gate.S: Gate.SDG, Gate.SDG: Gate.S, Gate.T: Gate.TDG, Gate.TDG: Gate.T}
        out = []
        for ins in reversed(self.instructions):
            if ins.gate in (Gate.MEASURE_Z, Gate.RESET):
                raise ValueError("non-unitary circuits have no inverse")
            angle = -ins.angle if ins.gate is Gate.RZ else None
            out.append(Instruction(inv.get(ins.gate, ins.gate), ins.qubits, angle, None, ins.noise))
        return Circuit(self.num_qubits, out)


class CircuitBuilder:
    """Append-only helper used by the circuit generators."""

    def __init__(self, num_qubits: int):
        self.num_qubits = num_qubits
        self.instructions: list[Instruction] = []
        self.num_clbits = 0

    def add(self, gate: Gate | str, qubits: Sequence[int], *, angle=None, noise=None) -> "CircuitBuilder":
        self.instructions.append(Instruction(Gate(gate), tuple(qubits), angle, None, noise))
        return self

    def h(self, q, noise=None):
        return self.add(Gate.H, (q,), noise=noise)

    def s(self, q, noise=None):
        return self.add(Gate.S, (q,), noise=noise)

    def sdg(self, q, noise=None):
        return self.add(Gate.SDG, (q,), noise=noise)

    def x(self, q, noise=None):
        return self.add(Gate.X, (q,), noise=noise)

    def cx(self, c, t, noise=None):
        return self.add(Gate.CNOT, (c, t), noise=noise)

    def ccx(self, a, b, c, noise=None):
        return self.add(Gate.CCX, (a, b, c), noise=noise)

    def rz(self, q, angle, noise=None):
        return self.add(Gate.RZ, (q,), angle=float(angle), noise=noise)

    def idle(self, q, noise="idle"):
        return self.add(Gate.I, (q,), noise=noise)

    def reset(self, q, noise=None):
        return self.add(Gate.RESET, (q,), noise=noise)

    def measure(self, q, noise=None) -> int:
        cbit = self.num_clbits
        self.num_clbits += 1
        self.instructions.append(Instruction(Gate.MEASURE_Z, (q,), None, cbit, noise))
        return cbit

    def extend(self, instructions: Iterable[Instruction]):
        for ins in instructions:
            if ins.gate is Gate.MEASURE_Z:
                self.measure(ins.qubits[0], ins.noise)
            else:
                self.instructions.append(ins)
        return self

    def build(self) -> Circuit:
        return Circuit(self.num_qubits, tuple(self.instructions), self.num_clbits)


def decompose_toffoli(circuit: Circuit) -> Circuit:
    """Replace every CCX by the 6-CNOT Clifford+T network.

    Sub-gates are tagged with the generic 1q/2q channels so that the CNOT noise
    count matches a CNOT-native device.
    """
    if not any(ins.gate is Gate.CCX for ins in circuit):
        return circuit
    out: list[Instruction] = []
    one, two = "after-1q-gate", "after-2q-gate"
    for ins in circuit:
        if ins.gate is not Gate.CCX:
            out.append(ins)
            continue
        a, b, c = ins.qubits
        seq = [
            (Gate.H, (c,)), (Gate.CNOT, (b, c)), (Gate.TDG, (c,)), (Gate.CNOT, (a, c)),
            (Gate.T, (c,)), (Gate.CNOT, (b, c)), (Gate.TDG, (c,)), (Gate.CNOT, (a, c)),
            (Gate.T, (b,)), (Gate.T, (c,)), (Gate.H, (c,)), (Gate.CNOT, (a, b)),
            (Gate.T, (a,)), (Gate.TDG, (b,)), (Gate.CNOT, (a, b)),
        ]
        for g, qs in seq:
            out.append(Instruction(g, qs, noise=two if g is Gate.CNOT else one))
    return Circuit(circuit.num_qubits, out, circuit.num_clbits)


# --------------------------------------------------------------------------- QASM

QASM_HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


def _fmt_angle(a: float) -> str:
    return repr(float(a))


def emit_qasm(circuit: Circuit) -> str:
    lines = [QASM_HEADER.rstrip("\n"), f"qreg q[{circuit.num_qubits}];"]
    if circuit.num_clbits:
        lines.append(f"creg c[{circuit.num_clbits}];")
    for ins in circuit:
        args = ",".join(f"q[{q}]" for q in ins.qubits)
        if ins.gate is Gate.MEASURE_Z:
            stmt = f"measure {args} -> c[{ins.cbit}];"
        elif ins.gate is Gate.RZ:
            stmt = f"rz({_fmt_angle(ins.angle)}) {args};"
        else:
            stmt = f"{ins.gate.value} {args};"
        if ins.noise:
            stmt += f" // noise: {ins.noise}"
        lines.append(stmt)
    return "\n".join(lines) + "\n"


class QasmError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


_BY_NAME = {g.value: g for g in Gate}
_REG = re.compile(r"(\w+)\s*\[\s*(\d+)\s*\]")
_NOISE_COMMENT = re.compile(r"//\s*noise:\s*([\w-]+)")
_ANGLE = re.compile(
    r"^\s*(?P<neg>-)?\s*(?:(?P<num>[0-9.]+(?:[eE][-+]?\d+)?)\s*\*?\s*)?(?P<pi>pi)?\s*(?:/\s*(?P<den>[0-9.]+))?\s*$"
)


def _parse_angle(text: str, line: int, col: int) -> float:
    m = _ANGLE.match(text)
    if not m or (m.group("num") is None and m.group("pi") is None):
        raise QasmError(f"cannot parse angle {text.strip()!r}", line, col)
    val = float(m.group("num")) if m.group("num") else 1.0
    if m.group("pi"):
        val *= math.pi
    if m.group("den"):
        val /= float(m.group("den"))
    return -val if m.group("neg") else val


def _statements(text: str):
    """Yield (statement, line, column, noise_tag) with comments stripped."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        code, _, comment = raw.partition("//")
        tag = None
        if comment:
            m = _NOISE_COMMENT.match("//" + comment)
            tag = m.group(1) if m else None
        pos = 0
        parts = code.split(";")
        stmts = []
        for chunk in parts[:-1]:
            lead = len(chunk) - len(chunk.lstrip())
            if chunk.strip():
                stmts.append((chunk.strip(), lineno, pos + lead + 1))
            pos += len(chunk) + 1
        if parts[-1].strip():
            raise QasmError("missing ';'", lineno, pos + 1)
        for k, (s, ln, col) in enumerate(stmts):
            yield s, ln, col, tag if k == len(stmts) - 1 else None


def parse_qasm(text: str) -> Circuit:
    """Parse the OpenQASM 2.0 subset produced by :func:`emit_qasm`."""
    stmts = list(_statements(text))
    if not stmts or stmts[0][0].split() != ["OPENQASM", "2.0"]:
        line, col = (stmts[0][1], stmts[0][2]) if stmts else (1, 1)
        raise QasmError("expected 'OPENQASM 2.0;' header", line, col)
    nq = None
    nc = 0
    qname = cname = None
    out: list[Instruction] = []
    for stmt, line, col, tag in stmts[1:]:
        head, _, rest = stmt.partition(" ")
        head_full = stmt.split("(")[0].split()[0]
        if head == "include":
            continue
        if head in ("qreg", "creg"):
            m = _REG.fullmatch(rest.strip())
            if not m:
                raise QasmError(f"malformed {head} declaration", line, col)
            if head == "qreg":
                if nq is not None:
                    raise QasmError("only one qreg is supported", line, col)
                qname, nq = m.group(1), int(m.group(2))
            else:
                if cname is not None:
                    raise QasmError("only one creg is supported", line, col)
                cname, nc = m.group(1), int(m.group(2))
            continue
        if nq is None:
            raise QasmError("gate before qreg declaration", line, col)
        angle = None
        if "(" in stmt:
            open_at = stmt.index("(")
            close_at = stmt.find(")")
            if close_at < 0:
                raise QasmError("unbalanced parenthesis", line, col + open_at)
            angle = _parse_angle(stmt[open_at + 1:close_at], line, col + open_at + 1)
            rest = stmt[close_at + 1:]
        else:
            rest = stmt[len(head_full):]
        gate = _BY_NAME.get(head_full)
        if gate is None:
            raise QasmError(f"unknown gate {head_full!r}", line, col)
        cbit = None
        if gate is Gate.MEASURE_Z:
            lhs, arrow, rhs = rest.partition("->")
            if not arrow:
                raise QasmError("measure needs '-> c[k]'", line, col)
            m = _REG.fullmatch(rhs.strip())
            if not m or m.group(1) != cname:
                raise QasmError("unknown classical register", line, col + stmt.index("->") + 2)
            cbit = int(m.group(2))
            if cbit >= nc:
                raise QasmError(f"classical index {cbit} out of range", line, col + stmt.index("->") + 2)
            rest = lhs
        qubits = []
        offset = stmt.index(rest) if rest else len(stmt)
        for m in _REG.finditer(rest):
            if m.group(1) != qname:
                raise QasmError(f"unknown register {m.group(1)!r}", line, col + offset + m.start())
            q = int(m.group(2))
            if q >= nq:
                raise QasmError(f"qubit index {q} out of range for qreg of size {nq}", line, col + offset + m.start())
            qubits.append(q)
        try:
            out.append(Instruction(gate, tuple(qubits), angle, cbit, tag))
        except ValueError as exc:
            raise QasmError(str(exc), line, col) from None
    if nq is None:
        raise QasmError("no qreg declared", stmts[-1][1], stmts[-1][2])
    return Circuit(nq, out, nc)
