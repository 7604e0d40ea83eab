"""End-to-end acceptance suite: one test per headline claim, in order.

 1. context parities come out of the exact operator algebra
 2. the stabilizer oracle agrees with the dense integer-matrix oracle
 3. the noncontextual inequality bounds are 4 (square) and 9 (extension)
 4. the three-state builtin saturates the quantum value and fails only
    the compatibility family
 5. three states are minimal for the same-context family; two states
    cannot even handle row/column runs plus repetitions
 6. four states are minimal once compatibility sandwiches are added
 7. the four-state builtin is the only machine of its size up to
    symmetry (the census; hours, disable with CMLAB_SKIP_CENSUS=1)
 8. no four-state machine survives on the fifteen-observable extension
 9. reproducing every certain prediction needs more than four but at
    most ten states
10. the collapse orbit of a two-generator pure state has 24 elements
11. cross-cutting property sweeps: table parity, fixpoint vs brute
    force, sign-flip invariance, serialization round trip

Node counts of finished searches are pinned below; both engines are
deterministic, so any drift is a behavior change and needs explaining.
"""

import itertools
import math
import os
import random

import pytest

from cmlab import checker
from cmlab.automaton import Automaton, build_ten_state, builtin, parse, serialize
from cmlab.inequality import (
    chi_automaton,
    inequality_value,
    min_violations,
    noncontextual_max,
    three_contradiction_square_lemma,
)
from cmlab.observables import build_extended_square, build_pm_square, pauli_product
from cmlab.oracle import (
    MIXED,
    dense_oracle_check,
    make_state,
    reachable_pure_count,
    trace_possible,
)
from cmlab.search import (
    SearchProblem,
    _load_engine,
    canonicalize,
    contradiction_count,
    encode,
    memory_cost,
    search,
    transform,
    value_group,
)

needs_compiled = pytest.mark.skipif(
    _load_engine()[1] == "pure",
    reason="needs the compiled engine for acceptable runtime",
)

PM = build_pm_square()
EXT = build_extended_square()
A3 = builtin("A3")
A4 = builtin("A4")

K1_CONTEXT_NODES = 12
K2_CONTEXT_NODES = 1260
K2_RC_REPEAT_NODES = 17334
K3_CONTEXT_FIRST_NODES = 102484
K3_CONTEXT_ALL_NODES = 880293
K3_BOTH_NODES = 879211
K4_RESTRICTED_NODES = 1534628638
K4_CENSUS_NODES = None  # pinned after the first full census run
K4_CENSUS_AUTOMATA = None

BOTH_PRIMES = ("context'", "compat'")


def test_criterion_01_context_parities():
    """Every declared context multiplies to its parity times the identity."""
    for s in (PM, EXT):
        for ctx in s.contexts:
            p, phase = s.observables[ctx.members[0]], 1
            for m in ctx.members[1:]:
                p, ph = pauli_product(p, s.observables[m])
                phase *= ph
            assert p.is_identity
            assert phase == ctx.parity
    assert len(PM.contexts) == 6
    assert len(EXT.contexts) == 15
    assert sum(c.parity == -1 for c in PM.contexts) == 1
    assert sum(c.parity == -1 for c in EXT.contexts) == 3


def test_criterion_02_oracle_agreement():
    """Stabilizer and dense oracles agree: exhaustively on square traces of
    length <= 4, and on 10,000 random extension traces of length <= 8."""
    for length in range(1, 5):
        for obs in itertools.product(range(PM.n), repeat=length):
            for signbits in range(1 << length):
                trace = [
                    (PM.observables[o].code, 1 - 2 * ((signbits >> i) & 1))
                    for i, o in enumerate(obs)
                ]
                assert trace_possible(MIXED, trace) == dense_oracle_check(trace)
    rng = random.Random(20240814)
    for _ in range(10000):
        length = rng.randint(1, 8)
        trace = [
            (EXT.observables[rng.randrange(EXT.n)].code, rng.choice((1, -1)))
            for _ in range(length)
        ]
        assert trace_possible(MIXED, trace) == dense_oracle_check(trace)


def test_criterion_03_inequality_bounds():
    """Noncontextual bounds 4 and 9 versus quantum values 6 and 15, exactly."""
    assert noncontextual_max(PM) == 4
    assert noncontextual_max(EXT) == 9
    assert min_violations(PM) == 1
    assert min_violations(EXT) == 3
    # the all-plus assignment violates exactly the minus-parity contexts,
    # meeting the bound in both structures
    r6 = inequality_value((1,) * 9, PM)
    assert (r6.value, r6.bound_noncontextual, r6.bound_quantum) == (4, 4, 6)
    r15 = inequality_value((1,) * 15, EXT)
    assert (r15.value, r15.bound_noncontextual, r15.bound_quantum) == (9, 9, 15)


def test_criterion_04_three_state_machine():
    """A3 reaches the quantum value 6 from every start, obeys the primed
    context family, and breaks compatibility with a short sandwich whose
    endpoints are the same observable."""
    for s in (1, 2, 3):
        assert chi_automaton(A3, initial=s).value == 6
    assert checker.check(A3, "context'").obeys
    verdict = checker.check(A3, "compat'")
    assert not verdict.obeys
    ce = verdict.counterexample
    assert len(ce.record.inputs) <= 4
    assert ce.record.inputs[0] == ce.record.inputs[-1]


def test_criterion_05_minimal_context_memory():
    """Three states are minimal for the primed context family: two states
    fail even row/column runs plus repetitions, and the exhaustive k=3
    run finds A3's equivalence class."""
    o2 = search(SearchProblem(k=2, families=("rc", "repeat")))
    assert o2.status == "exhausted"
    assert o2.nodes == K2_RC_REPEAT_NODES
    o3 = search(SearchProblem(k=3, families=("context'",), find_all=True))
    assert o3.status == "found"
    assert o3.nodes == K3_CONTEXT_ALL_NODES
    assert len(o3.automata) == 4
    assert len(o3.classes) == 2
    assert encode(canonicalize(A3, free=True)) in {encode(c) for c in o3.classes}
    m = memory_cost(("context'",))
    assert m.status == "found"
    assert m.k == 3
    assert m.bits == pytest.approx(math.log2(3))
    assert m.trail == (
        (1, "exhausted", K1_CONTEXT_NODES),
        (2, "exhausted", K2_CONTEXT_NODES),
        (3, "found", K3_CONTEXT_FIRST_NODES),
    )


def test_criterion_06_four_state_lower_bound():
    """No three-state machine obeys both primed families, and A4 does, so
    the memory cost of the pair is exactly two bits.  A capped run reports
    unfinished rather than pretending to a verdict."""
    o = search(SearchProblem(k=3, families=BOTH_PRIMES))
    assert o.status == "exhausted"
    assert o.nodes == K3_BOTH_NODES
    for fam in BOTH_PRIMES:
        assert checker.check(A4, fam).obeys
    assert math.log2(A4.k) == 2.0
    capped = search(SearchProblem(k=3, families=BOTH_PRIMES, budget_nodes=1000))
    assert capped.status == "unfinished"


@needs_compiled
def test_criterion_07_four_state_census():
    """Finding all four-state machines for both primed families yields a
    single equivalence class under the declared symmetry group: A4's."""
    if os.environ.get("CMLAB_SKIP_CENSUS"):
        pytest.skip("census disabled via CMLAB_SKIP_CENSUS")
    o = search(SearchProblem(k=4, families=BOTH_PRIMES, find_all=True))
    assert o.status == "found"
    if K4_CENSUS_NODES is not None:
        assert o.nodes == K4_CENSUS_NODES
    if K4_CENSUS_AUTOMATA is not None:
        assert len(o.automata) == K4_CENSUS_AUTOMATA
    assert len(o.classes) == 1
    a4_class = encode(canonicalize(A4, free=True))
    assert encode(o.classes[0]) == a4_class
    for a in o.automata:
        assert encode(canonicalize(a, free=True)) == a4_class


@needs_compiled
def test_criterion_08_extended_lower_bound():
    """No four-state machine obeys the extension's primed families.

    Chain: every value table over the fifteen observables has an embedded
    square with exactly three contradicted contexts (the lemma, checked
    over all 2^15 assignments), so a four-state machine restricted to that
    square would be a four-state square machine carrying a three-
    contradiction table, and the restricted search rules those out.
    Smaller closures are covered by the k <= 3 exhaustions.  Together:
    the extension needs strictly more than two bits of memory.
    """
    rep = three_contradiction_square_lemma()
    assert rep.holds
    assert rep.assignments == 1 << 15
    assert rep.squares == 10
    assert rep.histogram == (0, 61440, 0, 204800, 0, 61440)
    assert search(SearchProblem(k=1, families=("context'",))).status == "exhausted"
    assert search(SearchProblem(k=2, families=("context'",))).status == "exhausted"
    o3 = search(SearchProblem(k=3, families=BOTH_PRIMES))
    assert o3.status == "exhausted"
    o4 = search(SearchProblem(
        k=4, families=BOTH_PRIMES, restriction="three-contradictions"))
    assert o4.status == "exhausted"
    assert o4.nodes == K4_RESTRICTED_NODES
    assert o4.automata == ()


def test_criterion_09_all_predictions_bracket():
    """A4 misses some certain prediction while the ten-state builtin obeys
    them all, bracketing the full memory cost in (2, log2(10)]."""
    assert not checker.check(A4, "all").obeys
    a10 = build_ten_state()
    assert a10.k == 10
    assert sum(len(row) for row in a10.next) == 90
    assert all(1 <= t <= 10 for row in a10.next for t in row)
    assert checker.check(a10, "all").obeys
    assert 2 < math.log2(a10.k) <= 3.322


def test_criterion_10_pure_state_orbit():
    """Measurement collapse from the A+,B+ eigenstate visits 24 states."""
    start = make_state([(PM.observables[0], +1), (PM.observables[1], +1)])
    assert start.rank == 2
    assert reachable_pure_count(start, PM) == 24


def _agrees(a, fam, depth):
    # three-way comparison: the fixpoint checker sees arbitrarily long
    # runs, so its counterexample may be out of brute-force range
    fix = checker.check(a, fam)
    bf = checker.bounded_bruteforce(a, fam, depth)
    if fix.obeys:
        return bf.obeys
    if len(fix.counterexample.record.inputs) <= depth:
        return not bf.obeys
    return bf.obeys


def test_criterion_11_property_suites():
    """Cross-cutting sweeps: odd contradiction parity on all 512 tables,
    fixpoint versus depth-8 brute force on the builtins and 500 random
    machines, verdict invariance under the sign-flip group, and text
    round-tripping."""
    for code in range(512):
        row = tuple(1 - 2 * ((code >> j) & 1) for j in range(9))
        assert contradiction_count(row) % 2 == 1

    a10 = build_ten_state()
    for a in (A3, A4, a10):
        for fam in ("rc", "repeat", "context", "compat", "context'", "compat'"):
            assert _agrees(a, fam, 8)
        assert parse(serialize(a)) == a
    # the all-sequences families have no prefix pruning and grow ninefold
    # per step, so the obeying ten-state machine gets a shallower bound
    for a, fam, depth in (
        (A3, "all", 8), (A4, "all", 8), (a10, "all", 6),
        (A3, "all'", 8), (A4, "all'", 8), (a10, "all'", 5),
    ):
        assert _agrees(a, fam, depth)

    rng = random.Random(20260814)
    for _ in range(500):
        k = rng.randint(1, 3)
        values = tuple(
            tuple(rng.choice((1, -1)) for _ in range(9)) for _ in range(k)
        )
        nxt = tuple(tuple(rng.randint(1, k) for _ in range(9)) for _ in range(k))
        a = Automaton(PM, k, values, nxt, 1)
        for fam in ("rc", "repeat", "context'", "compat'"):
            assert _agrees(a, fam, 8)
        assert parse(serialize(a)) == a

    for g in value_group(PM, True, False):
        for a in (A3, A4):
            b = transform(a, g)
            for fam in checker.FAMILIES:
                assert checker.check(b, fam).obeys == checker.check(a, fam).obeys
