"""Noncontextuality inequality values, brute-force bounds, and the squares lemma.

The inequality for a structure is the parity-signed sum of context terms: each
term is the product of the three outcomes of one context, and its sign is the
context's required parity.  A model matching every quantum prediction scores
one point per context (6 for the 3x3 square, 15 for the full two-qubit set);
deterministic value assignments provably score less.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

from .automaton import Automaton, run
from .observables import Structure, build_extended_square, build_pm_square, \
    embedded_pm_squares


@dataclass(frozen=True)
class InequalityResult:
    value: int
    per_context: tuple  # one +-1 product per context, in structure order
    bound_noncontextual: int
    bound_quantum: int


@dataclass(frozen=True)
class LemmaReport:
    holds: bool
    histogram: tuple  # histogram[v] = number of (assignment, square) pairs
    assignments: int
    squares: int


def _signed_value(structure: Structure, terms) -> int:
    return int(sum(ctx.parity * t for ctx, t in zip(structure.contexts, terms)))


def _context_bits(structure: Structure):
    """(#assignments, per-context xor-of-member-bits matrix, parities)."""
    n = structure.n
    codes = np.arange(1 << n, dtype=np.uint32)
    bits = (codes[:, None] >> np.arange(n, dtype=np.uint32)) & 1
    viol = np.zeros((1 << n, len(structure.contexts)), dtype=np.uint8)
    parities = []
    for ci, ctx in enumerate(structure.contexts):
        a, b, c = ctx.members
        prod_neg = bits[:, a] ^ bits[:, b] ^ bits[:, c]  # 1 iff product is -1
        parities.append(ctx.parity)
        viol[:, ci] = prod_neg ^ (1 if ctx.parity == -1 else 0)
    return bits, viol, np.array(parities, dtype=np.int64)


@lru_cache(maxsize=None)
def _sweep(name: str):
    structure = build_pm_square() if name == "pm" else build_extended_square()
    _, viol, parities = _context_bits(structure)
    n_ctx = len(structure.contexts)
    violated = viol.sum(axis=1).astype(np.int64)
    values = n_ctx - 2 * violated  # signed sum identity for +-1 terms
    return values, violated


def inequality_value(assignment, structure: Structure = None) -> InequalityResult:
    """Evaluate the inequality for one +-1 value assignment."""
    if structure is None:
        structure = build_pm_square()
    vals = tuple(assignment)
    if len(vals) != structure.n or any(v not in (1, -1) for v in vals):
        raise ValueError("assignment must give +1 or -1 for every observable")
    terms = []
    for ctx in structure.contexts:
        prod = 1
        for m in ctx.members:
            prod *= vals[m]
        terms.append(prod)
    return InequalityResult(
        value=_signed_value(structure, terms),
        per_context=tuple(terms),
        bound_noncontextual=noncontextual_max(structure),
        bound_quantum=len(structure.contexts),
    )


def noncontextual_max(structure: Structure = None) -> int:
    """Largest inequality value over all deterministic value assignments."""
    if structure is None:
        structure = build_pm_square()
    values, _ = _sweep(structure.name)
    return int(values.max())


def min_violations(structure: Structure = None) -> int:
    """Fewest parity-violated contexts over all value assignments."""
    if structure is None:
        structure = build_pm_square()
    _, violated = _sweep(structure.name)
    return int(violated.min())


def _context_product(a: Automaton, initial: int, seq) -> int:
    rec = run(a, initial, seq)
    prod = 1
    for v in rec.outputs:
        prod *= v
    return prod


def chi_automaton(a: Automaton, initial: int = None) -> InequalityResult:
    """Inequality value of a machine, re-initialized before each context.

    Each term measures one context in its written order from the given start
    state; the machine is deterministic, so the single product is already the
    expectation value.
    """
    if a.structure.name != "pm":
        raise ValueError("chi is defined for the pm structure")
    if initial is None:
        initial = a.initial
    terms = tuple(
        _context_product(a, initial, ctx.members) for ctx in a.structure.contexts
    )
    return InequalityResult(
        value=_signed_value(a.structure, terms),
        per_context=terms,
        bound_noncontextual=noncontextual_max(a.structure),
        bound_quantum=len(a.structure.contexts),
    )


def chi_spread(a: Automaton, initial: int = None):
    """(lowest, highest) inequality value over all member orders per context.

    Machines that pass the run checkers give order-independent products, but
    violating machines may not; the spread makes that visible.
    """
    if a.structure.name != "pm":
        raise ValueError("chi is defined for the pm structure")
    if initial is None:
        initial = a.initial
    lo = hi = 0
    for ctx in a.structure.contexts:
        signed = [
            ctx.parity * _context_product(a, initial, order)
            for order in permutations(ctx.members)
        ]
        lo += min(signed)
        hi += max(signed)
    return lo, hi


def three_contradiction_square_lemma() -> LemmaReport:
    """Check that every assignment forces three contradictions in some square.

    For each of the 2^15 assignments to the full two-qubit set, count the
    violated contexts inside each of the 10 embedded 3x3 squares; the lemma
    holds if every assignment gives some square at least 3 violations.
    """
    structure = build_extended_square()
    _, viol, _ = _context_bits(structure)
    index = {ctx.members: i for i, ctx in enumerate(structure.contexts)}
    squares = embedded_pm_squares(structure)
    member = np.zeros((len(structure.contexts), len(squares)), dtype=np.uint8)
    for si, sq in enumerate(squares):
        for ctx in sq.contexts:
            member[index[ctx.members], si] = 1
    counts = viol @ member
    holds = bool((counts.max(axis=1) >= 3).all())
    histogram = np.bincount(counts.ravel())
    return LemmaReport(
        holds=holds,
        histogram=tuple(int(x) for x in histogram),
        assignments=counts.shape[0],
        squares=len(squares),
    )
