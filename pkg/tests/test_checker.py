"""Constraint-family checkers: pinned verdicts, witness replay, and agreement
with the explicit enumeration oracle."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from strategies import automata, relabel, state_permutations

from cmlab import checker
from cmlab.automaton import Automaton, build_ten_state, builtin, run
from cmlab.observables import build_pm_square
from cmlab.oracle import MIXED, trace_possible

PM = build_pm_square()
A3 = builtin("A3")
A4 = builtin("A4")
ONE_PLUS = Automaton(PM, 1, ((1,) * 9,), ((1,) * 9,))


def labels(a, ids):
    return tuple(a.structure.observables[j].label for j in ids)


def test_reachable():
    assert checker.reachable(A3) == (1, 2, 3)
    assert checker.reachable(A4) == (1, 2, 3, 4)
    assert checker.reachable(ONE_PLUS) == (1,)


def test_context_verdicts():
    assert checker.check_context(A3, prime=True).obeys
    assert checker.check_context(A4, prime=True).obeys
    v = checker.check_context(ONE_PLUS)
    assert not v.obeys
    assert labels(ONE_PLUS, v.counterexample.record.inputs) == ("C", "c", "gamma")
    assert "required -1" in v.counterexample.reason


def test_compat_verdicts():
    v = checker.check_compat(A3, prime=True)
    assert not v.obeys
    ce = v.counterexample
    assert ce.start == 1
    assert labels(A3, ce.record.inputs) == ("B", "C", "beta", "B")
    assert ce.record.outputs == (+1, +1, -1, -1)
    assert checker.check_compat(A4, prime=True).obeys
    assert checker.check_compat(ONE_PLUS, prime=True).obeys


def test_rc_and_repeat_verdicts():
    assert checker.check_rc(A3).obeys
    assert checker.check_repeat(A3).obeys
    assert checker.check_rc(A4, prime=True).obeys
    assert checker.check_repeat(A4, prime=True).obeys
    v = checker.check_rc(ONE_PLUS)
    assert not v.obeys
    assert labels(ONE_PLUS, v.counterexample.record.inputs) == ("C", "c", "gamma")


def test_all_verdicts():
    assert not checker.check_all(ONE_PLUS).obeys
    assert not checker.check_all(A3).obeys
    v = checker.check_all(A4)
    assert not v.obeys
    ten = build_ten_state()
    assert checker.check_all(ten).obeys
    assert checker.check_all(ten, prime=True).obeys


def test_all_witness_is_quantum_impossible():
    for a in (A3, A4, ONE_PLUS):
        ce = checker.check_all(a).counterexample
        trace = [
            (a.structure.observables[j].code, v)
            for j, v in zip(ce.record.inputs, ce.record.outputs)
        ]
        assert not trace_possible(MIXED, trace)
        assert trace_possible(MIXED, trace[:-1])


def test_context_witness_is_quantum_impossible():
    ce = checker.check_context(ONE_PLUS).counterexample
    trace = [
        (ONE_PLUS.structure.observables[j].code, v)
        for j, v in zip(ce.record.inputs, ce.record.outputs)
    ]
    assert not trace_possible(MIXED, trace)


def test_check_dispatch():
    assert checker.check(A3, "context'").obeys
    assert not checker.check(A3, "compat'").obeys
    assert checker.check(A3, "rc").obeys
    assert not checker.check(A3, "all").obeys
    with pytest.raises(ValueError):
        checker.check(A3, "weird")


def test_known_five_step_witness_against_A4():
    # the five-step sequence beta a b C c is answered +,+,+,+,- although the
    # last outcome is certain to be +1 given the third-row outputs
    rec = run(A4, 1, ["beta", "a", "b", "C", "c"])
    assert rec.outputs == (+1, +1, +1, +1, -1)
    trace = [(A4.structure.observables[j].code, v)
             for j, v in zip(rec.inputs, rec.outputs)]
    assert not trace_possible(MIXED, trace)


def test_bruteforce_depth_zero_obeys():
    for fam in checker.FAMILIES:
        assert checker.bounded_bruteforce(ONE_PLUS, fam, 0).obeys


def test_bruteforce_matches_fixpoint_on_builtins():
    for a in (A3, A4, ONE_PLUS):
        for fam in ("context", "context'", "compat", "compat'"):
            fix = checker.check(a, fam)
            bf = checker.bounded_bruteforce(a, fam, 6)
            assert fix.obeys == bf.obeys
            if not fix.obeys:
                assert fix.counterexample.start == bf.counterexample.start
                assert fix.counterexample.record.inputs == bf.counterexample.record.inputs


def test_bruteforce_matches_fixpoint_on_all_family():
    for a in (A3, A4, ONE_PLUS):
        fix = checker.check_all(a)
        bf = checker.bounded_bruteforce(a, "all", 6)
        assert not fix.obeys and not bf.obeys
        assert len(bf.counterexample.record.inputs) <= 6
        assert fix.counterexample.record.inputs == bf.counterexample.record.inputs
    assert checker.bounded_bruteforce(build_ten_state(), "all", 3).obeys


@settings(max_examples=60)
@given(automata())
def test_bruteforce_matches_fixpoint_on_random(a):
    for fam in ("context'", "compat'"):
        fix = checker.check(a, fam)
        bf = checker.bounded_bruteforce(a, fam, 5)
        if fix.obeys:
            assert bf.obeys
        elif len(fix.counterexample.record.inputs) <= 5:
            assert not bf.obeys
            assert fix.counterexample.record.inputs == bf.counterexample.record.inputs
            assert fix.counterexample.start == bf.counterexample.start
        else:
            # the fixpoint's minimal witness is out of bruteforce range
            assert bf.obeys


@settings(max_examples=60)
@given(automata())
def test_monotonicity(a):
    if checker.check_context(a, prime=True).obeys:
        assert checker.check_context(a).obeys
    if checker.check_context(a).obeys:
        assert checker.check_rc(a).obeys
        assert checker.check_repeat(a).obeys
    if checker.check_all(a, prime=True).obeys:
        assert checker.check_all(a).obeys
    if checker.check_compat(a, prime=True).obeys:
        assert checker.check_compat(a).obeys


@settings(max_examples=40)
@given(st.data())
def test_verdicts_invariant_under_relabeling(data):
    a = data.draw(automata())
    perm = data.draw(st.permutations(range(1, a.k + 1)))
    b = relabel(a, tuple(perm))
    for fam in checker.FAMILIES:
        assert checker.check(a, fam).obeys == checker.check(b, fam).obeys


@settings(max_examples=40)
@given(st.data())
def test_two_by_two_sign_flip_preserves_verdicts(data):
    a = data.draw(automata())
    rows = data.draw(st.sampled_from([(0, 1), (0, 2), (1, 2)]))
    cols = data.draw(st.sampled_from([(0, 1), (0, 2), (1, 2)]))
    grid = a.structure.grid
    flipped = {grid[r][c] for r in rows for c in cols}
    values = tuple(
        tuple(-v if j in flipped else v for j, v in enumerate(row))
        for row in a.values
    )
    b = Automaton(a.structure, a.k, values, a.next, a.initial)
    for fam in ("context", "context'", "compat", "compat'", "rc", "repeat"):
        assert checker.check(a, fam).obeys == checker.check(b, fam).obeys


def test_ten_state_all_family_bruteforce_spotcheck():
    ten = build_ten_state()
    assert checker.bounded_bruteforce(ten, "all'", 3).obeys
