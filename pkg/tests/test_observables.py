"""Pauli algebra and structure tables against an independent dense oracle.

The oracle below builds every operator as an explicit 4x4 complex matrix from
literal 2x2 Paulis, so the exact integer phase arithmetic in the package is
checked against plain numpy linear algebra.
"""

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmlab.observables import (
    Pauli,
    build_extended_square,
    build_pm_square,
    commutes_code,
    embedded_pm_squares,
    pauli_product,
    phase_exponent_code,
    structure_by_name,
)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def dense1(x, z):
    m = np.linalg.matrix_power(X, x) @ np.linalg.matrix_power(Z, z)
    return (1j) ** (x * z) * m


def dense(p):
    # qubit 0 is the first tensor factor, i.e. the left kron factor
    m0 = dense1(p.x & 1, p.z & 1)
    m1 = dense1((p.x >> 1) & 1, (p.z >> 1) & 1)
    return np.kron(m0, m1)


ALL_PAULIS = [Pauli(x, z) for x in range(4) for z in range(4)]


def test_single_qubit_dense_oracle_is_standard():
    assert np.allclose(dense1(0, 0), I2)
    assert np.allclose(dense1(1, 0), X)
    assert np.allclose(dense1(0, 1), Z)
    assert np.allclose(dense1(1, 1), Y)


def test_product_matches_dense_on_all_pairs():
    for p, q in itertools.product(ALL_PAULIS, repeat=2):
        r, phase = pauli_product(p, q)
        assert phase in (1, -1, 1j, -1j)
        assert np.allclose(dense(p) @ dense(q), phase * dense(r))


def test_commutation_matches_dense_on_all_pairs():
    for p, q in itertools.product(ALL_PAULIS, repeat=2):
        mp, mq = dense(p), dense(q)
        assert commutes_code(p.code, q.code) == np.allclose(mp @ mq, mq @ mp)


def test_self_product_is_identity_with_plus_phase():
    for p in ALL_PAULIS:
        r, phase = pauli_product(p, p)
        assert r.is_identity and phase == 1


@given(st.integers(0, 15), st.integers(0, 15))
def test_commuting_iff_symmetric_phase(c1, c2):
    symmetric = phase_exponent_code(c1, c2) == phase_exponent_code(c2, c1)
    assert commutes_code(c1, c2) == symmetric


def _dense_identity_check(s, ctx):
    m = np.eye(4, dtype=complex)
    for i in ctx.members:
        m = m @ dense(s.observables[i])
    assert np.allclose(m, ctx.parity * np.eye(4))


@pytest.mark.parametrize("name", ["pm", "extended15"])
def test_context_parities_against_dense(name):
    s = structure_by_name(name)
    for ctx in s.contexts:
        for i, j in itertools.combinations(ctx.members, 2):
            assert s.compat[i][j]
        _dense_identity_check(s, ctx)


@pytest.mark.parametrize("name", ["pm", "extended15"])
def test_compat_matrix_against_dense(name):
    s = structure_by_name(name)
    for i in range(s.n):
        for j in range(s.n):
            mi, mj = dense(s.observables[i]), dense(s.observables[j])
            assert s.compat[i][j] == np.allclose(mi @ mj, mj @ mi)


def test_pm_square_layout():
    s = build_pm_square()
    assert s.labels() == ("A", "B", "C", "a", "b", "c", "alpha", "beta", "gamma")
    assert s.grid == ((0, 1, 2), (3, 4, 5), (6, 7, 8))
    by_members = {c.members: c.parity for c in s.contexts}
    assert by_members == {
        (0, 1, 2): +1,
        (3, 4, 5): +1,
        (6, 7, 8): +1,
        (0, 3, 6): +1,
        (1, 4, 7): +1,
        (2, 5, 8): -1,
    }


def test_pm_square_operators():
    s = build_pm_square()
    assert np.allclose(dense(s.observables[s.index["A"]]), np.kron(Z, I2))
    assert np.allclose(dense(s.observables[s.index["B"]]), np.kron(I2, Z))
    assert np.allclose(dense(s.observables[s.index["c"]]), np.kron(X, X))
    assert np.allclose(dense(s.observables[s.index["gamma"]]), np.kron(Y, Y))


def test_extended_square_layout():
    s = build_extended_square()
    assert s.n == 15
    assert s.labels()[:4] == ("chi01", "chi02", "chi03", "chi10")
    assert len(s.contexts) == 15
    parities = sorted(c.parity for c in s.contexts)
    assert parities.count(-1) == 3 and parities.count(+1) == 12
    minus = {frozenset(s.observables[i].label for i in c.members)
             for c in s.contexts if c.parity == -1}
    assert minus == {
        frozenset({"chi11", "chi22", "chi33"}),
        frozenset({"chi12", "chi23", "chi31"}),
        frozenset({"chi13", "chi21", "chi32"}),
    }


def test_extended_contains_pm_observables():
    pm, ext = build_pm_square(), build_extended_square()
    ext_codes = {p.code for p in ext.observables}
    assert all(p.code in ext_codes for p in pm.observables)


def test_embedded_squares_in_pm():
    squares = embedded_pm_squares(build_pm_square())
    assert len(squares) == 1
    assert squares[0].grid == ((0, 1, 2), (3, 4, 5), (6, 7, 8))


def test_embedded_squares_in_extended():
    s = build_extended_square()
    squares = embedded_pm_squares(s)
    assert len(squares) == 10
    minus_counts = sorted(
        sum(1 for c in sq.contexts if c.parity == -1) for sq in squares
    )
    assert minus_counts == [1] * 9 + [3]
    # every context sits in exactly 4 of the 10 squares
    hits = {c.members: 0 for c in s.contexts}
    for sq in squares:
        for c in sq.contexts:
            hits[c.members] += 1
    assert set(hits.values()) == {4}


def test_structure_by_name_rejects_unknown():
    with pytest.raises(ValueError):
        structure_by_name("nope")
