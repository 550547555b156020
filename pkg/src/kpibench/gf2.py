"""Linear algebra over GF(2) for the period-finding benchmark.

Binary matrices, companion matrices of primitive polynomials, maximum-cycle
checks, Euler's totient of Mersenne numbers and CNOT-only synthesis of linear
reversible maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .circuit import Circuit, Gate, Instruction


class SingularMatrixError(ValueError):
    """The matrix is not invertible, so it is not a permutation."""


class BinaryMatrix:
    """Square 0/1 matrix with arithmetic mod 2. Immutable."""

    __slots__ = ("_a",)

    def __init__(self, rows):
        a = np.array(rows, dtype=np.uint8)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"binary matrix must be square, got shape {a.shape}")
        if np.any(a > 1):
            raise ValueError("entries must be 0 or 1")
        a.setflags(write=False)
        self._a = a

    @classmethod
    def identity(cls, n: int) -> "BinaryMatrix":
        return cls(np.eye(n, dtype=np.uint8))

    @property
    def n(self) -> int:
        return self._a.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._a

    def tolist(self) -> list[list[int]]:
        return self._a.tolist()

    def __matmul__(self, other: "BinaryMatrix") -> "BinaryMatrix":
        return mat_mul_mod2(self, other)

    def __eq__(self, other) -> bool:
        return isinstance(other, BinaryMatrix) and np.array_equal(self._a, other._a)

    def __hash__(self) -> int:
        return hash(self._a.tobytes())

    def __repr__(self) -> str:
        return f"BinaryMatrix({self.tolist()})"

    def apply(self, bits: Sequence[int]) -> np.ndarray:
        """b -> M b mod 2."""
        return (self._a.astype(np.int64) @ np.asarray(bits, dtype=np.int64)) % 2

    def rank(self) -> int:
        a = self._a.copy()
        r = 0
        for c in range(self.n):
            piv = np.nonzero(a[r:, c])[0]
            if piv.size == 0:
                continue
            p = r + piv[0]
            a[[r, p]] = a[[p, r]]
            mask = a[:, c].astype(bool)
            mask[r] = False
            a[mask] ^= a[r]
            r += 1
            if r == self.n:
                break
        return r

    def is_invertible(self) -> bool:
        return self.rank() == self.n

    def inverse(self) -> "BinaryMatrix":
        n = self.n
        aug = np.concatenate([self._a, np.eye(n, dtype=np.uint8)], axis=1)
        for c in range(n):
            piv = np.nonzero(aug[c:, c])[0]
            if piv.size == 0:
                raise SingularMatrixError("matrix is singular over GF(2)")
            p = c + piv[0]
            aug[[c, p]] = aug[[p, c]]
            mask = aug[:, c].astype(bool)
            mask[c] = False
            aug[mask] ^= aug[c]
        return BinaryMatrix(aug[:, n:])


@dataclass(frozen=True)
class BinaryPolynomial:
    """x^n + c_{n-1} x^{n-1} + ... + c_0, leading coefficient implicit."""

    coeffs: tuple[int, ...]  # c_0 .. c_{n-1}

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))
        if any(c not in (0, 1) for c in self.coeffs):
            raise ValueError("coefficients must be bits")

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @classmethod
    def from_exponents(cls, n: int, exponents: Sequence[int]) -> "BinaryPolynomial":
        """Build from the exponents of the non-leading terms, e.g. x^3+x+1 -> (3, [1, 0])."""
        c = [0] * n
        for e in exponents:
            if not 0 <= e < n:
                raise ValueError(f"exponent {e} outside [0, {n})")
            c[e] = 1
        return cls(tuple(c))

    def __str__(self) -> str:
        terms = [f"x^{self.degree}"]
        for e in range(self.degree - 1, -1, -1):
            if self.coeffs[e]:
                terms.append("1" if e == 0 else ("x" if e == 1 else f"x^{e}"))
        return "+".join(terms)


# One primitive polynomial per degree, as exponents of the non-leading terms.
PRIMITIVE_POLYNOMIALS: dict[int, tuple[int, ...]] = {
    2: (1, 0),
    3: (1, 0),
    4: (1, 0),
    5: (2, 0),
    6: (1, 0),
    7: (1, 0),
    8: (4, 3, 2, 0),
    9: (4, 0),
    10: (3, 0),
    11: (2, 0),
    12: (6, 4, 1, 0),
    13: (4, 3, 1, 0),
    14: (10, 6, 1, 0),
    15: (1, 0),
    16: (12, 3, 1, 0),
    17: (3, 0),
    18: (7, 0),
    19: (5, 2, 1, 0),
    20: (3, 0),
    21: (2, 0),
    22: (1, 0),
    23: (5, 0),
    24: (7, 2, 1, 0),
    25: (3, 0),
    26: (6, 2, 1, 0),
    27: (5, 2, 1, 0),
    28: (3, 0),
    29: (2, 0),
    30: (6, 4, 1, 0),
    31: (3, 0),
    32: (22, 2, 1, 0),
}


def primitive_polynomial(n: int) -> BinaryPolynomial:
    try:
        return BinaryPolynomial.from_exponents(n, PRIMITIVE_POLYNOMIALS[n])
    except KeyError:
        raise ValueError(f"no built-in primitive polynomial of degree {n}; supply coefficients") from None


def companion_matrix(p: BinaryPolynomial) -> BinaryMatrix:
    n = p.degree
    if n < 2:
        raise ValueError(f"invalid degree {n}: companion matrices need degree >= 2")
    m = np.zeros((n, n), dtype=np.uint8)
    m[np.arange(n - 1), np.arange(1, n)] = 1
    m[n - 1, :] = p.coeffs
    return BinaryMatrix(m)


def mat_mul_mod2(a: BinaryMatrix, b: BinaryMatrix) -> BinaryMatrix:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    prod = a.array.astype(np.int64) @ b.array.astype(np.int64)
    return BinaryMatrix((prod & 1).astype(np.uint8))


def mat_pow2_mod2(m: BinaryMatrix, q: int) -> BinaryMatrix:
    """M^(2^q) by q squarings."""
    if q < 0:
        raise ValueError("q must be non-negative")
    for _ in range(q):
        m = mat_mul_mod2(m, m)
    return m


def mat_pow_mod2(m: BinaryMatrix, e: int) -> BinaryMatrix:
    result = BinaryMatrix.identity(m.n)
    base = m
    while e:
        if e & 1:
            result = mat_mul_mod2(result, base)
        base = mat_mul_mod2(base, base)
        e >>= 1
    return result


@lru_cache(maxsize=None)
def factorize(value: int) -> tuple[tuple[int, int], ...]:
    """Trial-division factorization as ((prime, exponent), ...)."""
    if value < 1:
        raise ValueError("can only factor positive integers")
    out = []
    d = 2
    while d * d <= value:
        if value % d == 0:
            e = 0
            while value % d == 0:
                value //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if value > 1:
        out.append((value, 1))
    return tuple(out)


def mersenne_factorization(n: int) -> tuple[tuple[int, int], ...]:
    return factorize(2**n - 1)


def _check_factorization(value: int, factorization) -> list[tuple[int, int]]:
    pairs = [(int(p), int(e)) for p, e in factorization]
    prod = 1
    for p, e in pairs:
        if e < 1 or p < 2:
            raise ValueError(f"bad prime power {p}^{e}")
        prod *= p**e
    if prod != value:
        raise ValueError(f"factorization multiplies to {prod}, expected {value}")
    return pairs


def is_maximum_cycle(m: BinaryMatrix, factorization=None) -> bool:
    """True iff the multiplicative order of ``m`` is 2^n - 1.

    ``factorization`` lists (prime, exponent) pairs of 2^n - 1; it is computed
    when omitted.
    """
    n = m.n
    r = 2**n - 1
    pairs = _check_factorization(r, factorization if factorization is not None else mersenne_factorization(n))
    if not m.is_invertible():
        raise SingularMatrixError("matrix is singular over GF(2)")
    eye = BinaryMatrix.identity(n)
    if mat_pow_mod2(m, r) != eye:
        return False
    return all(mat_pow_mod2(m, r // p) != eye for p, _ in pairs)


def euler_totient_of_mersenne(n: int, factorization=None) -> int:
    """phi(2^n - 1) from the prime-power factorization."""
    pairs = _check_factorization(2**n - 1, factorization if factorization is not None else mersenne_factorization(n))
    phi = 1
    for p, e in pairs:
        phi *= p ** (e - 1) * (p - 1)
    return phi


# --------------------------------------------------------------- CNOT synthesis

def _lower_cnot_synth(a: np.ndarray, section: int) -> list[tuple[int, int]]:
    """Reduce ``a`` to upper-triangular form by row additions.

    Returns the row operations as (source, target) pairs meaning
    ``a[target] ^= a[source]``; lowest-index pivots break ties.
    """
    n = a.shape[0]
    ops: list[tuple[int, int]] = []
    for start in range(0, n, section):
        stop = min(start + section, n)
        if section > 1:
            seen: dict[bytes, int] = {}
            for row in range(start, n):
                key = a[row, start:stop].tobytes()
                if not a[row, start:stop].any():
                    continue
                if key in seen:
                    a[row] ^= a[seen[key]]
                    ops.append((seen[key], row))
                else:
                    seen[key] = row
        for col in range(start, stop):
            if not a[col, col]:
                for row in range(col + 1, n):
                    if a[row, col]:
                        a[col] ^= a[row]
                        ops.append((row, col))
                        break
                else:
                    raise SingularMatrixError("matrix is singular over GF(2)")
            for row in range(col + 1, n):
                if a[row, col]:
                    a[row] ^= a[col]
                    ops.append((col, row))
    return ops


def _cnot_pairs(m: BinaryMatrix, section: int) -> list[tuple[int, int]]:
    a = m.array.copy()
    lower = _lower_cnot_synth(a, section)
    a = a.T.copy()
    upper = _lower_cnot_synth(a, section)
    if not np.array_equal(a, np.eye(m.n, dtype=np.uint8)):
        raise SingularMatrixError("matrix is singular over GF(2)")
    # Row ops R_k...R_1 M = U and column ops reduce U to I; undo in reverse.
    pairs = [(t, s) for s, t in upper] + [(s, t) for s, t in reversed(lower)]
    return pairs


def synthesize_cnot_network(m: BinaryMatrix) -> Circuit:
    """CNOT-only circuit realizing b -> M b on qubits 0..n-1.

    Plain Gaussian elimination gives at most n^2 CNOTs; for n >= 8 the
    section-partitioned variant (Patel-Markov-Hayes) is also tried and the
    shorter circuit is kept.
    """
    n = m.n
    if not m.is_invertible():
        raise SingularMatrixError("not a permutation: matrix is singular over GF(2)")
    best = _cnot_pairs(m, 1)
    if n >= 8:
        section = max(2, round(math.log2(n) / 2))
        alt = _cnot_pairs(m, section)
        if len(alt) < len(best):
            best = alt
    ins = [Instruction(Gate.CNOT, (c, t)) for c, t in best]
    return Circuit(n, ins)


def cnot_network_matrix(circuit: Circuit, n: int | None = None) -> BinaryMatrix:
    """GF(2) matrix of a CNOT/SWAP/X-free linear circuit, for checking synthesis."""
    n = n or circuit.num_qubits
    a = np.eye(n, dtype=np.uint8)
    for ins in circuit:
        if ins.gate is Gate.CNOT:
            c, t = ins.qubits
            a[t] ^= a[c]
        elif ins.gate is Gate.SWAP:
            i, j = ins.qubits
            a[[i, j]] = a[[j, i]]
        else:
            raise ValueError(f"{ins.gate.name} is not a linear reversible gate")
    return BinaryMatrix(a)
