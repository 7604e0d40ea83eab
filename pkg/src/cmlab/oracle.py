"""Exact quantum oracle for sequences of two-qubit Pauli measurements.

Two independent backends answer the same question, "can this sequence of
outcomes occur, and which outcomes are certain":

* a stabilizer oracle tracking at most two signed commuting generators in a
  canonical form, starting from the completely mixed state (no generators),
* a dense oracle multiplying unnormalized 4x4 Gaussian-integer matrices, whose
  trace gives the exact dyadic probability of the sequence.

Both are pure functions over immutable values.  Probabilities other than the
dense trace weight are deliberately not computed; possible vs certain is all
the downstream checkers need, and it is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np

from .observables import Pauli, Structure, commutes_code, phase_exponent_code

__all__ = [
    "StabilizerState",
    "Prediction",
    "ContradictionError",
    "MIXED",
    "make_state",
    "group_elements",
    "predict",
    "collapse",
    "trace_possible",
    "reachable_pure_count",
    "dense_trace_weight",
    "dense_oracle_check",
]


class ContradictionError(ValueError):
    """Raised when a requested outcome contradicts a certain prediction."""

    def __init__(self) -> None:
        super().__init__("contradicts-certain-prediction")


class Prediction(NamedTuple):
    deterministic: bool
    outcome: int = 0  # meaningful only when deterministic


RANDOM = Prediction(False, 0)


@dataclass(frozen=True)
class StabilizerState:
    """At most two signed commuting Pauli generators, canonically ordered.

    The canonical form stores the one or two smallest-code nontrivial elements
    of the generated group, sorted by code, so equal states compare and hash
    equal.  The empty tuple is the completely mixed state.
    """

    gens: tuple[tuple[int, int], ...]

    @property
    def rank(self) -> int:
        return len(self.gens)


MIXED = StabilizerState(())


def _code_of(p) -> int:
    c = p.code if isinstance(p, Pauli) else int(p)
    if not 1 <= c <= 15:
        raise ValueError(f"not a nonidentity two-qubit Pauli: {p!r}")
    return c


def _product_sign(c1: int, c2: int) -> int:
    # only valid for commuting codes, where the i-power is 0 or 2
    e = phase_exponent_code(c1, c2)
    assert e % 2 == 0
    return 1 if e == 0 else -1


@lru_cache(maxsize=None)
def _group(gens: tuple[tuple[int, int], ...]) -> tuple[tuple[int, int], ...]:
    if len(gens) < 2:
        return gens
    (c1, s1), (c2, s2) = gens
    third = (c1 ^ c2, s1 * s2 * _product_sign(c1, c2))
    return tuple(sorted([gens[0], gens[1], third]))


def group_elements(s: StabilizerState) -> tuple[tuple[int, int], ...]:
    """All nontrivial (code, sign) elements of the generated group."""
    return _group(s.gens)


def _canonical(gens: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    gens = tuple(gens)
    if len(gens) < 2:
        return gens
    return _group(gens)[:2]


def make_state(pairs: Iterable[tuple]) -> StabilizerState:
    """Build a state from (Pauli-or-code, sign) pairs, validating invariants."""
    gens = []
    for p, sign in pairs:
        if sign not in (+1, -1):
            raise ValueError(f"sign must be +1 or -1, got {sign!r}")
        gens.append((_code_of(p), sign))
    if len(gens) > 2:
        raise ValueError("at most two generators")
    if len(gens) == 2:
        (c1, _), (c2, _) = gens
        if c1 == c2:
            raise ValueError("generators must be independent")
        if not commutes_code(c1, c2):
            raise ValueError("generators must commute")
    return StabilizerState(_canonical(gens))


def predict(s: StabilizerState, p) -> Prediction:
    c = _code_of(p)
    for gc, gs in group_elements(s):
        if gc == c:
            return Prediction(True, gs)
    return RANDOM


def collapse(s: StabilizerState, p, outcome: int) -> StabilizerState:
    """State after projectively measuring ``p`` and seeing ``outcome``."""
    c = _code_of(p)
    if outcome not in (+1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")
    for gc, gs in group_elements(s):
        if gc == c:
            if gs != outcome:
                raise ContradictionError()
            return s
    anti = [i for i, (gc, _) in enumerate(s.gens) if not commutes_code(gc, c)]
    if not anti:
        # p commutes with the whole group but is outside it; at rank 2 the
        # group is its own centralizer among the 15 codes, so this branch
        # only occurs below full rank
        assert s.rank < 2
        return StabilizerState(_canonical(s.gens + ((c, outcome),)))
    pc, ps = s.gens[anti[0]]
    kept = []
    for i, (gc, gs) in enumerate(s.gens):
        if i == anti[0]:
            continue
        if i in anti:
            kept.append((gc ^ pc, gs * ps * _product_sign(gc, pc)))
        else:
            kept.append((gc, gs))
    kept.append((c, outcome))
    return StabilizerState(_canonical(kept))


def trace_possible(start: StabilizerState, trace: Iterable[tuple]) -> bool:
    """True iff the outcome sequence has nonzero probability from ``start``."""
    s = start
    try:
        for p, v in trace:
            s = collapse(s, p, v)
    except ContradictionError:
        return False
    return True


def reachable_pure_count(start: StabilizerState, obs: Structure) -> int:
    """Size of the closure of a pure state under all possible collapses."""
    if start.rank != 2:
        raise ValueError("reachable_pure_count requires a rank-2 (pure) state")
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for s in frontier:
            for p in obs.observables:
                pr = predict(s, p)
                outcomes = (pr.outcome,) if pr.deterministic else (+1, -1)
                for v in outcomes:
                    t = collapse(s, p, v)
                    assert t.rank == 2
                    if t not in seen:
                        seen.add(t)
                        nxt.append(t)
        frontier = nxt
    return len(seen)


# --- dense Gaussian-integer oracle ------------------------------------------
#
# Matrices are (re, im) pairs of 4x4 object-dtype integer arrays, so entries
# are exact Python ints of any size.  The state starts as the unnormalized
# identity and each measurement maps rho -> (1 + v P) rho (1 + v P); after m
# steps the sequence probability is tr(rho) / 4^(m+1).

_INT1 = (np.eye(2, dtype=object), np.zeros((2, 2), dtype=object))
_INTX = (np.array([[0, 1], [1, 0]], dtype=object), np.zeros((2, 2), dtype=object))
_INTZ = (np.array([[1, 0], [0, -1]], dtype=object), np.zeros((2, 2), dtype=object))
_INTY = (np.zeros((2, 2), dtype=object), np.array([[0, -1], [1, 0]], dtype=object))


def _gm_mul(a, b):
    ar, ai = a
    br, bi = b
    return ar @ br - ai @ bi, ar @ bi + ai @ br


def _gm_kron(a, b):
    ar, ai = a
    br, bi = b
    return np.kron(ar, br) - np.kron(ai, bi), np.kron(ar, bi) + np.kron(ai, br)


def _single(x: int, z: int):
    return (_INT1, _INTX, _INTZ, _INTY)[x + 2 * z]  # i^(xz) X^x Z^z


@lru_cache(maxsize=None)
def pauli_matrix_int(code: int):
    """The 4x4 Gaussian-integer matrix of a Pauli code, qubit 0 leftmost."""
    x, z = code & 3, (code >> 2) & 3
    return _gm_kron(_single(x & 1, z & 1), _single((x >> 1) & 1, (z >> 1) & 1))


def dense_trace_weight(trace: Iterable[tuple]) -> Fraction:
    """Exact probability of an outcome sequence from the mixed state."""
    eye = (np.eye(4, dtype=object), np.zeros((4, 4), dtype=object))
    rho = eye
    m = 0
    for p, v in trace:
        pr, pi = pauli_matrix_int(_code_of(p))
        proj = (eye[0] + v * pr, eye[1] + v * pi)
        rho = _gm_mul(proj, _gm_mul(rho, proj))
        m += 1
    tr_re = sum(rho[0][i, i] for i in range(4))
    tr_im = sum(rho[1][i, i] for i in range(4))
    assert tr_im == 0 and tr_re >= 0
    return Fraction(int(tr_re), 4 ** (m + 1))


def dense_oracle_check(trace: Iterable[tuple]) -> bool:
    return dense_trace_weight(trace) != 0
