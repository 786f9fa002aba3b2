from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rationals
from markovdual.exactnum import GaussRat
from markovdual.linop import (EXACT, FLOAT, FieldError, NotNilpotentError, SparseOp, adjoint,
                              commutator, compose, exp_nilpotent, inverse, kron, kron_all,
                              left_null_space, null_space, rank, transpose, uniformized_semigroup)
from oracle_values import ORACLES


def mat(n, m=None):
    m = n if m is None else m
    return st.lists(st.lists(rationals, min_size=m, max_size=m), min_size=n, max_size=n)


def gmat(n):
    entry = st.builds(GaussRat, rationals, rationals)
    return st.lists(st.lists(entry, min_size=n, max_size=n), min_size=n, max_size=n)


PAULI_X = SparseOp.from_dense([[0, 1], [1, 0]])
PAULI_Y = SparseOp.from_dense([[0, -GaussRat(0, 1)], [GaussRat(0, 1), 0]])
PAULI_Z = SparseOp.from_dense([[1, 0], [0, -1]])
FLIP = SparseOp.from_dense([[-1, 1], [1, -1]])


def test_pauli_commutator():
    assert commutator(PAULI_X, PAULI_Y) == PAULI_Z.scale(GaussRat(0, 2))


@given(mat(3))
def test_self_commutator_vanishes(a):
    A = SparseOp.from_dense(a)
    assert commutator(A, A).is_zero()


@settings(max_examples=25)
@given(gmat(5))
def test_adjoint_involution(a):
    A = SparseOp.from_dense(a)
    assert adjoint(adjoint(A)) == A


@settings(max_examples=25)
@given(gmat(3), gmat(3))
def test_adjoint_of_commutator(a, b):
    A, B = SparseOp.from_dense(a), SparseOp.from_dense(b)
    assert adjoint(commutator(A, B)) == commutator(adjoint(B), adjoint(A))


def test_kron_identity_and_site_operator():
    I = SparseOp.identity(2)
    assert kron(I, I) == SparseOp.identity(4)
    J0 = SparseOp.diag([Fraction(-1, 2), Fraction(1, 2)])
    op = kron(I, J0)
    # (I (x) J0) f(x1, x2) = (x2 - 1/2) f(x1, x2)
    assert [op[k, k] for k in range(4)] == [Fraction(-1, 2), Fraction(1, 2)] * 2


@given(mat(2), mat(2), mat(2), mat(2))
def test_kron_mixed_product(a, b, c, d):
    A, B, C, D = (SparseOp.from_dense(m) for m in (a, b, c, d))
    lhs = compose(kron(A, B), kron(C, D))
    assert lhs == kron(compose(A, C), compose(B, D))
    dense = np.kron(np.array(a, dtype=object), np.array(b, dtype=object)) @ \
        np.kron(np.array(c, dtype=object), np.array(d, dtype=object))
    assert lhs.to_dense() == dense.tolist()


@given(mat(2), mat(2), mat(2))
def test_kron_associative(a, b, c):
    A, B, C = (SparseOp.from_dense(m) for m in (a, b, c))
    assert kron(kron(A, B), C) == kron(A, kron(B, C))


def test_exp_nilpotent():
    Jp = SparseOp.from_dense([[0, 0], [1, 0]])  # 0-first basis
    assert exp_nilpotent(Jp) == SparseOp.from_dense([[1, 0], [1, 1]])
    assert exp_nilpotent(SparseOp.zero(3)) == SparseOp.identity(3)
    Kp = kron(Jp, SparseOp.identity(2)) + kron(SparseOp.identity(2), Jp)
    E = exp_nilpotent(Kp)
    assert E == kron(SparseOp.identity(2) + Jp, SparseOp.identity(2) + Jp)
    assert compose(E, exp_nilpotent(Kp.scale(-1))) == SparseOp.identity(4)
    with pytest.raises(NotNilpotentError):
        exp_nilpotent(SparseOp.identity(2))


def test_semigroup():
    assert uniformized_semigroup(FLIP, 0.0) == SparseOp.identity(2, FLOAT)
    P = uniformized_semigroup(FLIP, 0.5).to_numpy()
    assert abs(P[0, 0] - ORACLES["flip_p00_t_half"]) < 1e-12
    P = uniformized_semigroup(FLIP, 40.0).to_numpy()
    assert np.allclose(P, 0.5, atol=1e-12)


@settings(max_examples=20)
@given(st.lists(st.integers(0, 5), min_size=12, max_size=12), st.sampled_from([0.1, 1.0, 3.0]))
def test_semigroup_rows_stochastic(rates, t):
    entries, k = {}, 0
    for i in range(4):
        for j in range(4):
            if i != j:
                entries[(i, j)] = rates[k]
                k += 1
        entries[(i, i)] = -sum(entries.get((i, j), 0) for j in range(4) if j != i)
    L = SparseOp((4, 4), entries)
    P = uniformized_semigroup(L, t).to_numpy()
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(P > -1e-14)


def test_semigroup_matches_dense_exponential():
    from scipy.linalg import expm

    L = SparseOp.from_dense([[-3, 1, 2, 0], [0, -1, 1, 0], [1, 1, -4, 2], [0, 0, 5, -5]])
    for t in (0.1, 1.0, 7.0):
        P = uniformized_semigroup(L, t).to_numpy()
        assert np.allclose(P, expm(t * L.to_numpy().real), atol=1e-12)


def test_null_spaces():
    assert len(null_space(SparseOp.zero(3))) == 3
    assert null_space(SparseOp.identity(3)) == []
    (mu,) = left_null_space(FLIP)
    assert mu[0] == mu[1] != 0


@settings(max_examples=30)
@given(mat(3, 4))
def test_null_space_vectors_are_annihilated(a):
    A = SparseOp.from_dense(a)
    basis = null_space(A)
    for v in basis:
        assert all(x == 0 for x in A.apply(v))
    assert len(basis) + rank(A) == 4
    assert rank(A) == np.linalg.matrix_rank(np.array(a, dtype=float))


@settings(max_examples=30)
@given(mat(3))
def test_inverse(a):
    A = SparseOp.from_dense(a)
    if rank(A) < 3:
        with pytest.raises(ValueError):
            inverse(A)
    else:
        assert compose(A, inverse(A)) == SparseOp.identity(3)


def test_gauss_null_space():
    i = GaussRat(0, 1)
    A = SparseOp.from_dense([[1, i], [i, -1]])
    (v,) = null_space(A)
    assert all(x == 0 for x in A.apply(v))


def test_boundary_rows_propagate():
    A = SparseOp.identity(3).with_boundary([2])
    shift = SparseOp.from_dense([[0, 1, 0], [0, 0, 1], [0, 0, 0]])
    # row 1 of the shift reads row 2 of A, which is unsafe; row 2 of the shift is empty
    assert set(compose(shift, A).boundary_rows) == {1}
    assert set(compose(A, shift).boundary_rows) == {2}
    assert set((A + SparseOp.identity(3).with_boundary([0])).boundary_rows) == {0, 2}
    with pytest.raises(ValueError):
        transpose(A)


def test_field_mixing_rejected():
    with pytest.raises(FieldError):
        SparseOp.identity(2) + SparseOp.identity(2, FLOAT)
    assert SparseOp.identity(2).field == EXACT
