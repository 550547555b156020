import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpibench.gf2 import (
    PRIMITIVE_POLYNOMIALS,
    BinaryMatrix,
    BinaryPolynomial,
    SingularMatrixError,
    cnot_network_matrix,
    companion_matrix,
    euler_totient_of_mersenne,
    factorize,
    is_maximum_cycle,
    mat_mul_mod2,
    mat_pow2_mod2,
    mat_pow_mod2,
    primitive_polynomial,
    synthesize_cnot_network,
)
from kpibench.circuit import Gate


def random_invertible(n, rng):
    while True:
        m = BinaryMatrix(rng.integers(0, 2, (n, n)))
        if m.is_invertible():
            return m


def brute_order(m):
    eye = BinaryMatrix.identity(m.n)
    p, k = m, 1
    while p != eye:
        p = p @ m
        k += 1
    return k


def simulate_basis(circuit, bits):
    b = list(bits)
    for ins in circuit:
        assert ins.gate is Gate.CNOT
        c, t = ins.qubits
        b[t] ^= b[c]
    return b


def test_companion_matrix_cubic():
    m = companion_matrix(BinaryPolynomial((1, 1, 0)))
    assert m.tolist() == [[0, 1, 0], [0, 0, 1], [1, 1, 0]]
    assert brute_order(m) == 7


def test_companion_matrix_quadratic():
    assert companion_matrix(BinaryPolynomial((1, 1))).tolist() == [[0, 1], [1, 1]]


def test_companion_degree_error():
    with pytest.raises(ValueError, match="degree"):
        companion_matrix(BinaryPolynomial((1,)))


def test_mat_mul_examples():
    m = BinaryMatrix([[0, 1], [1, 1]])
    assert m @ m == BinaryMatrix([[1, 1], [1, 0]])
    assert BinaryMatrix.identity(2) @ m == m
    rng = np.random.default_rng(1)
    a = random_invertible(7, rng)
    assert a @ a.inverse() == BinaryMatrix.identity(7)
    with pytest.raises(ValueError, match="dimension"):
        mat_mul_mod2(a, m)


def test_mat_pow2_examples():
    m = companion_matrix(primitive_polynomial(3))
    assert mat_pow2_mod2(m, 0) == m
    assert mat_pow2_mod2(m, 1) == m @ m
    assert mat_pow2_mod2(m, 3) == m


@pytest.mark.parametrize("q", range(5))
def test_mat_pow2_equals_folded_product(q):
    rng = np.random.default_rng(q)
    m = BinaryMatrix(rng.integers(0, 2, (5, 5)))
    folded = BinaryMatrix.identity(5)
    for _ in range(2**q):
        folded = folded @ m
    assert mat_pow2_mod2(m, q) == folded


def test_maximum_cycle_examples():
    assert is_maximum_cycle(companion_matrix(BinaryPolynomial((1, 1, 0))), [(7, 1)])
    quartic = companion_matrix(BinaryPolynomial((1, 1, 1, 1)))
    assert brute_order(quartic) == 5
    assert not is_maximum_cycle(quartic, [(3, 1), (5, 1)])
    assert not is_maximum_cycle(BinaryMatrix.identity(3))


def test_maximum_cycle_errors():
    with pytest.raises(SingularMatrixError):
        is_maximum_cycle(BinaryMatrix([[1, 1], [1, 1]]))
    with pytest.raises(ValueError, match="multiplies"):
        is_maximum_cycle(companion_matrix(primitive_polynomial(4)), [(3, 1), (7, 1)])


@pytest.mark.parametrize("n", sorted(PRIMITIVE_POLYNOMIALS))
def test_builtin_table_is_primitive(n):
    m = companion_matrix(primitive_polynomial(n))
    assert is_maximum_cycle(m)


@pytest.mark.parametrize("n", range(2, 11))
def test_maximum_cycle_implies_full_orbit(n):
    m = companion_matrix(primitive_polynomial(n))
    assert is_maximum_cycle(m)
    start = np.zeros(n, dtype=np.int64)
    start[0] = 1
    v, length = m.apply(start), 1
    while not np.array_equal(v, start):
        v = m.apply(v)
        length += 1
    assert length == 2**n - 1


@pytest.mark.parametrize("n", range(2, 9))
def test_maximum_cycle_matches_brute_order(n):
    # every degree-n polynomial with c0 = 1
    for tail in range(2 ** (n - 1)):
        coeffs = [1] + [(tail >> k) & 1 for k in range(n - 1)]
        m = companion_matrix(BinaryPolynomial(tuple(coeffs)))
        assert is_maximum_cycle(m) == (brute_order(m) == 2**n - 1)


def test_totient_examples():
    assert euler_totient_of_mersenne(3) == 6
    assert euler_totient_of_mersenne(4, [(3, 1), (5, 1)]) == 8
    assert euler_totient_of_mersenne(6) == 36
    with pytest.raises(ValueError):
        euler_totient_of_mersenne(6, [(3, 1), (7, 1)])


@pytest.mark.parametrize("n", range(2, 13))
def test_totient_brute_force(n):
    r = 2**n - 1
    assert euler_totient_of_mersenne(n) == sum(1 for k in range(1, r + 1) if math.gcd(k, r) == 1)


def test_totient_counts_primitive_companions():
    # phi(2^n - 1) / n primitive polynomials of degree n
    for n in range(2, 9):
        count = 0
        for tail in range(2 ** (n - 1)):
            coeffs = [1] + [(tail >> k) & 1 for k in range(n - 1)]
            count += is_maximum_cycle(companion_matrix(BinaryPolynomial(tuple(coeffs))))
        assert count == euler_totient_of_mersenne(n) // n


def test_factorize():
    assert factorize(2**32 - 1) == ((3, 1), (5, 1), (17, 1), (257, 1), (65537, 1))
    assert factorize(63) == ((3, 2), (7, 1))


def test_cnot_identity_and_single():
    assert len(synthesize_cnot_network(BinaryMatrix.identity(4))) == 0
    c = synthesize_cnot_network(BinaryMatrix([[1, 0], [1, 1]]))
    assert [(i.gate, i.qubits) for i in c] == [(Gate.CNOT, (0, 1))]


def test_cnot_singular():
    with pytest.raises(SingularMatrixError, match="permutation"):
        synthesize_cnot_network(BinaryMatrix([[1, 1], [1, 1]]))


def test_cnot_random_6x6_exhaustive():
    rng = np.random.default_rng(2024)
    basis = [[(k >> j) & 1 for j in range(6)] for k in range(64)]
    for _ in range(100):
        m = random_invertible(6, rng)
        circ = synthesize_cnot_network(m)
        assert len(circ) <= 36
        for b in basis:
            assert simulate_basis(circ, b) == m.apply(b).tolist()


@pytest.mark.parametrize("n", range(2, 9))
def test_cnot_exhaustive_small(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        m = random_invertible(n, rng)
        circ = synthesize_cnot_network(m)
        assert len(circ) <= n * n
        for k in range(2**n):
            b = [(k >> j) & 1 for j in range(n)]
            assert simulate_basis(circ, b) == m.apply(b).tolist()


@pytest.mark.parametrize("n", [8, 12, 16, 24, 32])
def test_cnot_companion_powers(n):
    m = companion_matrix(primitive_polynomial(n))
    for q in range(0, 2 * n + 1, 5):
        mp = mat_pow2_mod2(m, q)
        circ = synthesize_cnot_network(mp)
        assert len(circ) <= n * n
        assert cnot_network_matrix(circ, n) == mp


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_cnot_property(n, seed):
    m = random_invertible(n, np.random.default_rng(seed))
    circ = synthesize_cnot_network(m)
    assert cnot_network_matrix(circ, n) == m
    assert len(circ) <= n * n


def test_mat_pow_matches_pow2():
    m = companion_matrix(primitive_polynomial(5))
    assert mat_pow_mod2(m, 16) == mat_pow2_mod2(m, 4)
    assert mat_pow_mod2(m, 31) == BinaryMatrix.identity(5)
