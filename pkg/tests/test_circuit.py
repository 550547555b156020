import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dense import circuit_unitary, gate_unitary
from kpibench.circuit import (
    NOISE_CHANNELS,
    Circuit,
    CircuitBuilder,
    Gate,
    Instruction,
    QasmError,
    decompose_toffoli,
    emit_qasm,
    parse_qasm,
)

ONE_Q = [Gate.H, Gate.S, Gate.SDG, Gate.X, Gate.Y, Gate.Z, Gate.T, Gate.TDG, Gate.I, Gate.RZ, Gate.RESET]
TWO_Q = [Gate.CNOT, Gate.CZ, Gate.SWAP]


def random_circuit(rng, n=4, length=30):
    b = CircuitBuilder(n)
    for _ in range(length):
        kind = rng.integers(4)
        noise = None if rng.random() < 0.5 else NOISE_CHANNELS[rng.integers(len(NOISE_CHANNELS))]
        qs = [int(q) for q in rng.permutation(n)]
        if kind == 0:
            g = ONE_Q[rng.integers(len(ONE_Q))]
            angle = float(rng.normal()) if g is Gate.RZ else None
            b.add(g, qs[:1], angle=angle, noise=noise)
        elif kind == 1 and n >= 2:
            b.add(TWO_Q[rng.integers(len(TWO_Q))], qs[:2], noise=noise)
        elif kind == 2 and n >= 3:
            b.ccx(*qs[:3], noise=noise)
        else:
            b.measure(qs[0], noise=noise)
    return b.build()


def test_instruction_validation():
    with pytest.raises(ValueError):
        Instruction(Gate.CNOT, (0,))
    with pytest.raises(ValueError):
        Instruction(Gate.CNOT, (1, 1))
    with pytest.raises(ValueError):
        Instruction(Gate.RZ, (0,), angle=float("nan"))
    with pytest.raises(ValueError):
        Instruction(Gate.H, (0,), noise="thermal")
    with pytest.raises(ValueError):
        Circuit(2, [Instruction(Gate.H, (2,))])
    with pytest.raises(ValueError, match="twice"):
        Circuit(2, [Instruction(Gate.MEASURE_Z, (0,), cbit=0), Instruction(Gate.MEASURE_Z, (1,), cbit=0)])


def test_toffoli_untouched_without_ccx():
    c = CircuitBuilder(2).h(0).cx(0, 1).build()
    assert decompose_toffoli(c) == c


def test_toffoli_gate_counts():
    c = decompose_toffoli(CircuitBuilder(3).ccx(0, 1, 2).build())
    assert c.count(Gate.CCX) == 0
    assert c.count(Gate.CNOT) == 6
    assert c.count(Gate.T) + c.count(Gate.TDG) == 7
    assert c.count(Gate.H) == 2


@pytest.mark.parametrize("order", [(0, 1, 2), (2, 0, 1), (1, 2, 0)])
def test_toffoli_unitary(order):
    native = CircuitBuilder(3).ccx(*order).build()
    dec = decompose_toffoli(native)
    assert np.allclose(circuit_unitary(dec), circuit_unitary(native), atol=1e-12)


def test_toffoli_matrix_is_standard():
    u = gate_unitary(3, Gate.CCX, (0, 1, 2))
    want = np.eye(8)
    want[[6, 7]] = want[[7, 6]]
    assert np.allclose(u, want)


def test_emit_empty():
    assert emit_qasm(Circuit(2)) == 'OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2];\n'


def test_emit_bell():
    b = CircuitBuilder(2).h(0).cx(0, 1)
    b.measure(0)
    b.measure(1)
    text = emit_qasm(b.build())
    assert "h q[0];\ncx q[0],q[1];\n" in text
    assert "creg c[2];" in text
    assert text.endswith("measure q[1] -> c[1];\n")


def test_emit_noise_comment():
    text = emit_qasm(CircuitBuilder(2).cx(0, 1, noise="after-2q-gate").build())
    assert "cx q[0],q[1]; // noise: after-2q-gate" in text


@pytest.mark.parametrize("seed", range(200))
def test_roundtrip_random(seed):
    c = random_circuit(np.random.default_rng(seed), n=1 + seed % 5)
    text = emit_qasm(c)
    back = parse_qasm(text)
    assert back == c
    assert emit_qasm(back) == text


def test_index_overflow_position():
    text = 'OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2];\ncx q[0],q[9];\n'
    with pytest.raises(QasmError) as err:
        parse_qasm(text)
    assert err.value.line == 4
    assert err.value.column == 9
    assert "out of range" in str(err.value)


def test_unknown_gate_and_header():
    with pytest.raises(QasmError, match="unknown gate") as err:
        parse_qasm("OPENQASM 2.0;\nqreg q[1];\n  foo q[0];\n")
    assert (err.value.line, err.value.column) == (3, 3)
    with pytest.raises(QasmError, match="header"):
        parse_qasm("OPENQASM 3.0;\nqreg q[1];\n")
    with pytest.raises(QasmError, match="header"):
        parse_qasm("")


def test_whitespace_and_comment_insensitive():
    base = emit_qasm(random_circuit(np.random.default_rng(7), n=3))
    messy = "// leading comment\n" + "\n\n".join(
        "   " + line.replace(",", " , ").replace(" ", "  ") + "   // note" if "noise" not in line else line
        for line in base.splitlines()
    )
    assert parse_qasm(messy) == parse_qasm(base)


def test_multiple_statements_per_line():
    c = parse_qasm("OPENQASM 2.0; qreg q[2]; h q[0]; cx q[0],q[1];")
    assert [i.gate for i in c] == [Gate.H, Gate.CNOT]


def test_pi_angles():
    c = parse_qasm("OPENQASM 2.0;\nqreg q[1];\nrz(pi/4) q[0];\nrz(-pi) q[0];\nrz(3*pi/2) q[0];\nrz(0.5) q[0];\n")
    assert [i.angle for i in c] == pytest.approx([np.pi / 4, -np.pi, 1.5 * np.pi, 0.5])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_emit_parse_idempotent(seed):
    text = emit_qasm(random_circuit(np.random.default_rng(seed), n=3, length=15))
    assert emit_qasm(parse_qasm(text)) == text


def test_inverse_circuit():
    c = CircuitBuilder(3).h(0).s(1).cx(0, 2).rz(1, 0.3).add(Gate.T, (2,)).build()
    u = circuit_unitary(c.then(c.inverse()))
    assert np.allclose(u, np.eye(8), atol=1e-12)
