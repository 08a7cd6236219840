from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dctapprox.linalg import (
    DyadicMatrix,
    DyadicRational,
    InvalidCycleError,
    SingularMatrixError,
    block_diag,
    butterfly,
    counter_identity,
    format_matrix,
    identity,
    inverse,
    parse_matrix,
    permutation_from_cycles,
    read_matrix,
    write_matrix,
)

dyadics = st.builds(DyadicRational, st.integers(-(2**20), 2**20), st.integers(-12, 12))


@given(dyadics, dyadics)
def test_dyadic_arithmetic_matches_fractions(a, b):
    fa, fb = a.to_fraction(), b.to_fraction()
    assert (a + b).to_fraction() == fa + fb
    assert (a - b).to_fraction() == fa - fb
    assert (a * b).to_fraction() == fa * fb
    assert (a < b) == (fa < fb)


@given(dyadics)
def test_canonical_form_and_text_round_trip(a):
    assert a.mantissa % 2 == 1 or a.mantissa == 0
    assert DyadicRational.from_value(str(a)) == a
    assert hash(a) == hash(DyadicRational.from_value(a.to_fraction()))


def test_non_dyadic_values_rejected():
    with pytest.raises(ValueError):
        DyadicRational.from_value(Fraction(1, 3))
    with pytest.raises(ValueError):
        DyadicRational.from_value("1/3")


small_dyadics = st.builds(DyadicRational, st.integers(-(2**10), 2**10), st.integers(-4, 4))
small_mats = st.integers(1, 5).flatmap(
    lambda n: st.tuples(
        st.lists(st.lists(small_dyadics, min_size=n, max_size=n), min_size=n, max_size=n),
        st.lists(st.lists(small_dyadics, min_size=n, max_size=n), min_size=n, max_size=n),
    )
)


@settings(max_examples=60)
@given(small_mats)
def test_matmul_is_exact(pair):
    a, b = (DyadicMatrix.from_values(m) for m in pair)
    fa = [[v.to_fraction() for v in r] for r in pair[0]]
    fb = [[v.to_fraction() for v in r] for r in pair[1]]
    n = len(fa)
    want = [[sum(fa[i][k] * fb[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    got = a @ b
    assert [[got[i, j].to_fraction() for j in range(n)] for i in range(n)] == want


def test_equality_is_exact_and_canonical():
    a = DyadicMatrix([[2, 4], [6, 8]])
    b = DyadicMatrix([[1, 2], [3, 4]], 1)
    assert a == b and hash(a) == hash(b)
    assert a.exponent == 1
    assert a != DyadicMatrix([[2, 4], [6, 9]])


def test_overflow_guard():
    big = DyadicMatrix([[2**40 + 1]])
    with pytest.raises(OverflowError):
        big @ big


def test_butterfly_and_counter_identity():
    b = butterfly(4).to_float()
    assert np.array_equal(b, [[1, 0, 0, 1], [0, 1, 1, 0], [0, -1, 1, 0], [-1, 0, 0, 1]])
    assert np.array_equal(counter_identity(3).to_float(), np.fliplr(np.eye(3)))
    with pytest.raises(ValueError):
        butterfly(3)


def test_block_diag_mixed_exponents():
    m = block_diag([DyadicMatrix([[1]], -1), identity(2)])
    assert np.array_equal(m.to_float(), np.diag([0.5, 1, 1]))


def test_permutation_orientation():
    p = permutation_from_cycles([(0, 1, 2)], 4)
    assert p.is_permutation()
    # column a is column sigma(a) of the identity: P e_0 = e_1
    assert np.array_equal(p.to_float() @ np.eye(4)[:, 0], np.eye(4)[:, 1])
    assert p @ p.T == identity(4)


def test_invalid_cycles():
    with pytest.raises(InvalidCycleError):
        permutation_from_cycles([(0, 4)], 4)
    with pytest.raises(InvalidCycleError):
        permutation_from_cycles([(0, 1), (1, 2)], 4)


def test_inverse_and_singular():
    a = np.array([[2.0, 1.0], [1.0, 1.0]])
    assert np.allclose(inverse(a) @ a, np.eye(2))
    with pytest.raises(SingularMatrixError):
        inverse(np.ones((3, 3)))


def test_matrix_text_round_trip(tmp_path):
    m = DyadicMatrix.from_values([["1/2^2", "-2", "0"], ["3", "-1/2^1", "1"]])
    assert parse_matrix(format_matrix(m)) == m
    f = np.array([[0.1, -2.5], [np.pi, 1e-17]])
    assert np.array_equal(parse_matrix(format_matrix(f)), f)
    p = tmp_path / "m.txt"
    write_matrix(p, m)
    assert read_matrix(p) == m


def test_parse_errors():
    with pytest.raises(ValueError):
        parse_matrix("")
    with pytest.raises(ValueError):
        parse_matrix("2 2\n1 0\n0\n")
