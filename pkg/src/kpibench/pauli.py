"""Signed Pauli strings and Aaronson-Gottesman stabilizer tableaux.

Tableau rows are bit-packed into 64-bit words along the qubit axis, so row
products and commutation checks are word-parallel. Rows ``0..n-1`` hold the
destabilizers and rows ``n..2n-1`` the stabilizers; row ``i`` of the tableau of
a Clifford ``U`` is ``U X_i U^dag`` (destabilizer) or ``U Z_i U^dag``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .circuit import Circuit, CircuitBuilder, Gate

_ONE = np.uint64(1)


def _nwords(n: int) -> int:
    return (n + 63) // 64


def pack_bits(bits) -> np.ndarray:
    """Pack a bool vector (or stack of them, last axis) into little-endian uint64 words."""
    bits = np.asarray(bits, dtype=bool)
    n = bits.shape[-1]
    w = _nwords(n)
    padded = np.zeros(bits.shape[:-1] + (w * 64,), dtype=bool)
    padded[..., :n] = bits
    return np.packbits(padded, axis=-1, bitorder="little").view(np.uint64)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    raw = np.ascontiguousarray(words).view(np.uint8)
    return np.unpackbits(raw, axis=-1, bitorder="little")[..., :n].astype(bool)


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).sum(axis=-1, dtype=np.int64)


def _phase_exponent(x1, z1, x2, z2) -> np.ndarray:
    """Sum over qubits of the power of i picked up by P1*P2 (rows broadcast)."""
    plus = (x1 & z1 & ~x2 & z2) | (x1 & ~z1 & x2 & z2) | (~x1 & z1 & x2 & ~z2)
    minus = (x1 & z1 & x2 & ~z2) | (x1 & ~z1 & ~x2 & z2) | (~x1 & z1 & x2 & z2)
    return _popcount(plus) - _popcount(minus)


@dataclass(frozen=True, eq=False)
class PauliString:
    """Hermitian N-qubit Pauli operator with a sign in {+1, -1}."""

    x: np.ndarray
    z: np.ndarray
    sign: int = 1

    def __post_init__(self):
        x = np.asarray(self.x, dtype=bool).copy()
        z = np.asarray(self.z, dtype=bool).copy()
        if x.shape != z.shape or x.ndim != 1:
            raise ValueError("x and z must be equal-length bit vectors")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        x.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.x.size

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(np.zeros(n, bool), np.zeros(n, bool))

    @classmethod
    def from_str(cls, text: str) -> "PauliString":
        """Parse e.g. ``"+XYZ"``, ``"-ZZI"`` or ``"X_Z"`` (``_`` means identity)."""
        sign = 1
        if text[:1] in "+-":
            sign = -1 if text[0] == "-" else 1
            text = text[1:]
        x = np.array([c in "XY" for c in text])
        z = np.array([c in "ZY" for c in text])
        if any(c not in "IXYZ_" for c in text):
            raise ValueError(f"bad Pauli string {text!r}")
        return cls(x, z, sign)

    @classmethod
    def single(cls, n: int, qubit: int, kind: str, sign: int = 1) -> "PauliString":
        x = np.zeros(n, bool)
        z = np.zeros(n, bool)
        x[qubit] = kind in "XY"
        z[qubit] = kind in "ZY"
        return cls(x, z, sign)

    def __str__(self) -> str:
        body = "".join("IXZY"[int(a) + 2 * int(b)] for a, b in zip(self.x, self.z))
        return ("+" if self.sign > 0 else "-") + body

    __repr__ = __str__

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliString)
            and self.sign == other.sign
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __hash__(self) -> int:
        return hash((self.sign, self.x.tobytes(), self.z.tobytes()))

    def key(self) -> tuple:
        return (self.sign, self.x.tobytes(), self.z.tobytes())

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def is_identity(self) -> bool:
        return not (self.x.any() or self.z.any())

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.x | self.z)

    def commutes(self, other: "PauliString") -> bool:
        if other.n != self.n:
            raise ValueError("qubit count mismatch")
        return not (np.count_nonzero(self.x & other.z) + np.count_nonzero(self.z & other.x)) % 2

    def __mul__(self, other: "PauliString") -> "PauliString":
        """Product of two commuting Pauli strings."""
        if not self.commutes(other):
            raise ValueError("product of anticommuting Paulis is not Hermitian")
        e = int(_phase_exponent(pack_bits(self.x), pack_bits(self.z), pack_bits(other.x), pack_bits(other.z)))
        e += (0 if self.sign > 0 else 2) + (0 if other.sign > 0 else 2)
        e %= 4
        return PauliString(self.x ^ other.x, self.z ^ other.z, 1 if e == 0 else -1)

    def __neg__(self) -> "PauliString":
        return PauliString(self.x, self.z, -self.sign)

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix (qubit 0 is the most significant tensor factor)."""
        mats = {(0, 0): np.eye(2), (1, 0): np.array([[0, 1], [1, 0]]),
                (0, 1): np.diag([1, -1]), (1, 1): np.array([[0, -1j], [1j, 0]])}
        out = np.array([[self.sign]], dtype=complex)
        for a, b in zip(self.x, self.z):
            out = np.kron(out, mats[(int(a), int(b))])
        return out


class StabilizerTableau:
    """Aaronson-Gottesman tableau with exact sign tracking."""

    def __init__(self, n: int, xs: np.ndarray, zs: np.ndarray, r: np.ndarray):
        self.n = n
        self.xs = xs  # (2n, W) uint64
        self.zs = zs
        self.r = r  # (2n,) uint8, sign of row i is (-1)**r[i]

    # ------------------------------------------------------------ construction
    @classmethod
    def identity(cls, n: int) -> "StabilizerTableau":
        if n < 1:
            raise ValueError("need at least one qubit")
        eye = np.eye(n, dtype=bool)
        zero = np.zeros((n, n), dtype=bool)
        xs = pack_bits(np.concatenate([eye, zero]))
        zs = pack_bits(np.concatenate([zero, eye]))
        return cls(n, xs, zs, np.zeros(2 * n, np.uint8))

    @classmethod
    def from_bits(cls, x: np.ndarray, z: np.ndarray, signs: np.ndarray) -> "StabilizerTableau":
        x = np.asarray(x, dtype=bool)
        z = np.asarray(z, dtype=bool)
        n = x.shape[1]
        if x.shape != (2 * n, n) or z.shape != x.shape:
            raise ValueError("tableau bit matrices must be 2n x n")
        return cls(n, pack_bits(x), pack_bits(z), np.asarray(signs, dtype=np.uint8) & 1)

    @classmethod
    def from_circuit(cls, circuit: Circuit) -> "StabilizerTableau":
        t = cls.identity(circuit.num_qubits)
        for ins in circuit:
            t.apply_gate(ins.gate, ins.qubits)
        return t

    def copy(self) -> "StabilizerTableau":
        return StabilizerTableau(self.n, self.xs.copy(), self.zs.copy(), self.r.copy())

    # ---------------------------------------------------------------- accessors
    def x_bits(self) -> np.ndarray:
        return unpack_bits(self.xs, self.n)

    def z_bits(self) -> np.ndarray:
        return unpack_bits(self.zs, self.n)

    def row(self, i: int) -> PauliString:
        return PauliString(unpack_bits(self.xs[i], self.n), unpack_bits(self.zs[i], self.n), -1 if self.r[i] else 1)

    def stabilizers(self) -> list[PauliString]:
        return [self.row(self.n + i) for i in range(self.n)]

    def destabilizers(self) -> list[PauliString]:
        return [self.row(i) for i in range(self.n)]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, StabilizerTableau)
            and self.n == other.n
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.zs, other.zs)
            and np.array_equal(self.r, other.r)
        )

    def key(self) -> bytes:
        """Serialized form, used to reject duplicate draws."""
        return self.xs.tobytes() + self.zs.tobytes() + self.r.tobytes()

    def stabilizer_key(self) -> bytes:
        n = self.n
        return self.xs[n:].tobytes() + self.zs[n:].tobytes() + self.r[n:].tobytes()

    def is_valid(self) -> bool:
        """Rows form a symplectic basis: D_i/S_i anticommute pairwise, all else commute."""
        x = self.x_bits().astype(np.int64)
        z = self.z_bits().astype(np.int64)
        form = (x @ z.T + z @ x.T) % 2
        n = self.n
        want = np.zeros((2 * n, 2 * n), dtype=np.int64)
        want[np.arange(n), np.arange(n) + n] = 1
        want[np.arange(n) + n, np.arange(n)] = 1
        return bool(np.array_equal(form, want))

    # -------------------------------------------------------------------- gates
    def _col(self, arr: np.ndarray, q: int) -> np.ndarray:
        return ((arr[:, q >> 6] >> np.uint64(q & 63)) & _ONE).astype(np.uint8)

    def _xor_col(self, arr: np.ndarray, q: int, bits: np.ndarray) -> None:
        arr[:, q >> 6] ^= bits.astype(np.uint64) << np.uint64(q & 63)

    def apply_gate(self, gate: Gate | str, qubits: Sequence[int]) -> "StabilizerTableau":
        """Conjugate every row by ``gate`` in place; returns self."""
        gate = Gate(gate)
        qs = tuple(int(q) for q in qubits)
        for q in qs:
            if not 0 <= q < self.n:
                raise ValueError(f"qubit {q} out of range")
        if len(set(qs)) != len(qs):
            raise ValueError(f"repeated qubit in {qs}")
        xs, zs = self.xs, self.zs
        if gate in (Gate.I,):
            return self
        if gate is Gate.CCX or gate in (Gate.T, Gate.TDG, Gate.RZ):
            raise ValueError(f"{gate.name} is not a Clifford gate")
        if gate in (Gate.MEASURE_Z, Gate.RESET):
            raise ValueError("use measure()/reset() for non-unitary operations")
        if len(qs) == 1:
            (q,) = qs
            x = self._col(xs, q)
            z = self._col(zs, q)
            if gate is Gate.H:
                self.r ^= x & z
                self._xor_col(xs, q, x ^ z)
                self._xor_col(zs, q, x ^ z)
            elif gate is Gate.S:
                self.r ^= x & z
                self._xor_col(zs, q, x)
            elif gate is Gate.SDG:
                self.r ^= x & (z ^ 1)
                self._xor_col(zs, q, x)
            elif gate is Gate.X:
                self.r ^= z
            elif gate is Gate.Z:
                self.r ^= x
            elif gate is Gate.Y:
                self.r ^= x ^ z
            else:
                raise ValueError(f"unsupported gate {gate.name}")
            return self
        a, b = qs
        xa, za = self._col(xs, a), self._col(zs, a)
        xb, zb = self._col(xs, b), self._col(zs, b)
        if gate is Gate.CNOT:
            self.r ^= xa & zb & (xb ^ za ^ 1)
            self._xor_col(xs, b, xa)
            self._xor_col(zs, a, zb)
        elif gate is Gate.CZ:
            self.r ^= xa & xb & (za ^ zb)
            self._xor_col(zs, a, xb)
            self._xor_col(zs, b, xa)
        elif gate is Gate.SWAP:
            self._xor_col(xs, a, xa ^ xb)
            self._xor_col(xs, b, xa ^ xb)
            self._xor_col(zs, a, za ^ zb)
            self._xor_col(zs, b, za ^ zb)
        else:
            raise ValueError(f"unsupported gate {gate.name}")
        return self

    def apply_circuit(self, circuit: Circuit) -> "StabilizerTableau":
        for ins in circuit:
            self.apply_gate(ins.gate, ins.qubits)
        return self

    # --------------------------------------------------------------- row algebra
    def _rowsum(self, targets: np.ndarray, src: int) -> None:
        """rows[t] <- rows[src] * rows[t] for every index in ``targets``."""
        if targets.size == 0:
            return
        x1, z1 = self.xs[src], self.zs[src]
        x2, z2 = self.xs[targets], self.zs[targets]
        e = _phase_exponent(x1[None, :], z1[None, :], x2, z2)
        e = (e + 2 * self.r[src].astype(np.int64) + 2 * self.r[targets].astype(np.int64)) % 4
        self.r[targets] = (e // 2).astype(np.uint8)
        self.xs[targets] = x2 ^ x1
        self.zs[targets] = z2 ^ z1

    def _product(self, rows: Sequence[int]) -> tuple[np.ndarray, np.ndarray, int]:
        w = self.xs.shape[1]
        x = np.zeros(w, np.uint64)
        z = np.zeros(w, np.uint64)
        e = 0
        for i in rows:
            e += int(_phase_exponent(self.xs[i], self.zs[i], x, z)) + 2 * int(self.r[i])
            x = x ^ self.xs[i]
            z = z ^ self.zs[i]
        return x, z, e % 4

    def anticommuting_rows(self, p: PauliString, rows: slice) -> np.ndarray:
        px, pz = pack_bits(p.x), pack_bits(p.z)
        cnt = _popcount(self.xs[rows] & pz) + _popcount(self.zs[rows] & px)
        return (cnt & 1).astype(bool)

    # -------------------------------------------------------------- measurement
    def measure(self, q: int, rng: np.random.Generator | None = None, forced: int | None = None) -> int:
        """Projective Z measurement of qubit ``q``; returns the outcome bit."""
        n = self.n
        xcol = self._col(self.xs, q).astype(bool)
        cand = np.flatnonzero(xcol[n:])
        if cand.size:
            p = n + int(cand[0])
            others = np.flatnonzero(xcol)
            others = others[others != p]
            self._rowsum(others, p)
            self.xs[p - n] = self.xs[p]
            self.zs[p - n] = self.zs[p]
            self.r[p - n] = self.r[p]
            self.xs[p] = 0
            self.zs[p] = 0
            self.zs[p, q >> 6] = _ONE << np.uint64(q & 63)
            if forced is not None:
                outcome = int(forced)
            else:
                outcome = int((rng if rng is not None else np.random.default_rng()).integers(2))
            self.r[p] = outcome
            return outcome
        rows = [n + int(i) for i in np.flatnonzero(xcol[:n])]
        _, _, e = self._product(rows)
        return e // 2

    def is_deterministic(self, q: int) -> bool:
        return not self._col(self.xs, q)[self.n:].any()

    def reset(self, q: int, rng: np.random.Generator | None = None) -> None:
        if self.measure(q, rng):
            self.apply_gate(Gate.X, (q,))


# ------------------------------------------------------------------ operations

def apply_gate(t: StabilizerTableau, g: Gate | str, qubits: Sequence[int]) -> StabilizerTableau:
    """Return a new tableau conjugated by the gate."""
    return t.copy().apply_gate(g, qubits)


def exact_expectation(t: StabilizerTableau, p: PauliString) -> int:
    """<p> on the stabilizer state of ``t``: +1, -1 or 0."""
    if p.n != t.n:
        raise ValueError(f"size mismatch: {p.n} vs {t.n}")
    n = t.n
    if t.anticommuting_rows(p, slice(n, 2 * n)).any():
        return 0
    # p = product of the stabilizers paired with the destabilizers it anticommutes with.
    sel = np.flatnonzero(t.anticommuting_rows(p, slice(0, n)))
    x, z, e = t._product([n + int(i) for i in sel])
    assert np.array_equal(x, pack_bits(p.x)[: x.size]) and np.array_equal(z, pack_bits(p.z)[: z.size])
    s = 1 if e == 0 else -1
    return s * p.sign


def stabilizer_group_element(t: StabilizerTableau, selector: Sequence[int]) -> PauliString:
    sel = np.asarray(selector, dtype=bool)
    if sel.shape != (t.n,):
        raise ValueError(f"selector must have length {t.n}")
    if not sel.any():
        raise ValueError("zero selector selects the identity, which is excluded")
    x, z, e = t._product([t.n + int(i) for i in np.flatnonzero(sel)])
    return PauliString(unpack_bits(x, t.n), unpack_bits(z, t.n), 1 if e == 0 else -1)


def sample_stabilizer(t: StabilizerTableau, rng: np.random.Generator) -> PauliString:
    while True:
        sel = rng.integers(0, 2, t.n).astype(bool)
        if sel.any():
            return stabilizer_group_element(t, sel)


def sample_destabilizer(t: StabilizerTableau, rng: np.random.Generator) -> PauliString:
    """Uniform non-identity Pauli outside the stabilizer group (random sign)."""
    n = t.n
    while True:
        x = rng.integers(0, 2, n).astype(bool)
        z = rng.integers(0, 2, n).astype(bool)
        if not (x.any() or z.any()):
            continue
        p = PauliString(x, z, 1 if rng.integers(2) else -1)
        if t.anticommuting_rows(p, slice(n, 2 * n)).any():
            return p


# ------------------------------------------------------- random Clifford sampling

def _sample_mallows(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Hadamard pattern and qubit permutation from the quantum Mallows distribution."""
    had = np.zeros(n, dtype=bool)
    perm = np.zeros(n, dtype=np.int64)
    pool = list(range(n))
    for i in range(n):
        m = n - i
        u = rng.random()
        eps = 4.0 ** (-m)
        k = -int(np.ceil(np.log2(u + (1 - u) * eps)))
        had[i] = k < m
        if k >= m:
            k = 2 * m - k - 1
        perm[i] = pool.pop(k)
    return had, perm


@lru_cache(maxsize=64)
def _tril(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.tril_indices(n, -1)


def _unit_lower_inverse(mat: np.ndarray) -> np.ndarray:
    n = mat.shape[0]
    inv = np.eye(n, dtype=np.int64)
    for i in range(1, n):
        # row i of the inverse: e_i + sum_{j<i} mat[i, j] * inv[j]
        inv[i] = (inv[i] + mat[i, :i] @ inv[:i]) % 2
    return inv


def _canonical_block(n: int, gamma_bits: np.ndarray, delta_bits: np.ndarray, diag: np.ndarray) -> np.ndarray:
    """Symplectic matrix [[delta, 0], [gamma delta, delta^-T]] from random bits."""
    rows, cols = _tril(n)
    gamma = np.zeros((n, n), dtype=np.int64)
    gamma[rows, cols] = gamma_bits
    gamma[cols, rows] = gamma_bits
    gamma[np.arange(n), np.arange(n)] = diag
    delta = np.eye(n, dtype=np.int64)
    delta[rows, cols] = delta_bits
    out = np.zeros((2 * n, 2 * n), dtype=np.int64)
    out[:n, :n] = delta
    out[n:, :n] = (gamma @ delta) % 2
    out[n:, n:] = _unit_lower_inverse(delta).T
    return out


def sample_random_clifford(n: int, rng: np.random.Generator) -> StabilizerTableau:
    """Uniformly random n-qubit Clifford (canonical form of Bravyi and Maslov)."""
    if n < 1:
        raise ValueError("need at least one qubit")
    had, perm = _sample_mallows(n, rng)
    m = n * (n - 1) // 2
    bits = rng.integers(0, 2, 4 * m + 4 * n)
    g1, g2, d1, d2 = (bits[k * m:(k + 1) * m] for k in range(4))
    diag1, diag2 = bits[4 * m:4 * m + n], bits[4 * m + n:4 * m + 2 * n]
    signs = bits[4 * m + 2 * n:]
    table1 = _canonical_block(n, g1, d1, diag1)
    table2 = _canonical_block(n, g2, d2, diag2)
    table = table2[np.concatenate([perm, n + perm])]
    h = np.flatnonzero(had)
    table[np.concatenate([h, n + h])] = table[np.concatenate([n + h, h])]
    sym = (table1 @ table) % 2
    return StabilizerTableau.from_bits(sym[:, :n], sym[:, n:], signs)


# -------------------------------------------------------------- circuit synthesis

def synthesize_clifford_circuit(t: StabilizerTableau) -> Circuit:
    """Circuit over {H, S, CNOT} whose tableau equals ``t`` exactly.

    Greedy column-by-column reduction of the tableau to the identity (after
    Aaronson and Gottesman), emitted in reverse with inverted gates. CNOTs
    replace the usual SWAPs when moving a pivot.
    """
    if not t.is_valid():
        raise ValueError("malformed tableau: rows are not a symplectic basis")
    n = t.n
    work = t.copy()
    ops: list[tuple[Gate, tuple[int, ...]]] = []

    def do(g: Gate, *qs: int) -> None:
        work.apply_gate(g, qs)
        ops.append((g, qs))

    def bits(row: int) -> tuple[np.ndarray, np.ndarray]:
        return unpack_bits(work.xs[row], n), unpack_bits(work.zs[row], n)

    for q in range(n):
        # Destabilizer row q: make x[q] = 1.
        x, z = bits(q)
        if not x[q]:
            hits = np.flatnonzero(x[q + 1:])
            if hits.size:
                do(Gate.CNOT, q + 1 + int(hits[0]), q)
            else:
                i = q + int(np.flatnonzero(z[q:])[0])
                do(Gate.H, i)
                if i != q:
                    do(Gate.CNOT, i, q)
        # Clear the rest of destabilizer row q.
        x, z = bits(q)
        for i in np.flatnonzero(x[q + 1:]) + q + 1:
            do(Gate.CNOT, q, int(i))
        x, z = bits(q)
        if z[q:].any():
            if not z[q]:
                do(Gate.SDG, q)
            x, z = bits(q)
            for i in np.flatnonzero(z[q + 1:]) + q + 1:
                do(Gate.CNOT, int(i), q)
            do(Gate.SDG, q)
        # Stabilizer row q.
        x, z = bits(n + q)
        for i in np.flatnonzero(z[q + 1:]) + q + 1:
            do(Gate.CNOT, int(i), q)
        x, z = bits(n + q)
        if x[q:].any():
            do(Gate.H, q)
            x, z = bits(n + q)
            for i in np.flatnonzero(x[q + 1:]) + q + 1:
                do(Gate.CNOT, q, int(i))
            x, z = bits(n + q)
            if z[q]:
                do(Gate.SDG, q)
            do(Gate.H, q)
    for q in range(n):
        if work.r[q]:
            do(Gate.Z, q)
        if work.r[n + q]:
            do(Gate.X, q)

    b = CircuitBuilder(n)
    for g, qs in reversed(ops):
        if g is Gate.SDG:
            b.s(qs[0])
        elif g is Gate.Z:
            b.s(qs[0]).s(qs[0])
        elif g is Gate.X:
            b.h(qs[0]).s(qs[0]).s(qs[0]).h(qs[0])
        else:
            b.add(g, qs)
    return b.build()
