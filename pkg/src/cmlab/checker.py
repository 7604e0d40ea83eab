"""Decision procedures for the constraint families.

Each check explores the product of the automaton with a finite monitor and
either certifies obedience or returns a shortest counterexample.  Primed
families quantify the starting state over everything reachable from the
initial state, which is equivalent to allowing an arbitrary ignored input
prefix: the prefix only matters through the state it leaves behind.

Witnesses are deterministic: breadth-first search with observables scanned in
ascending id order yields the lexicographically least among the shortest
violating traces per start, and candidates are compared by
(length, start, trace) across starts and monitors.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

from . import oracle
from .automaton import Automaton, RunRecord, run
from .observables import Context

__all__ = [
    "FAMILIES",
    "Verdict",
    "Counterexample",
    "reachable",
    "check",
    "check_context",
    "check_compat",
    "check_rc",
    "check_repeat",
    "check_all",
    "bounded_bruteforce",
]

FAMILIES = ("rc", "repeat", "context", "compat", "context'", "compat'", "all", "all'")


@dataclass(frozen=True)
class Counterexample:
    start: int
    record: RunRecord
    reason: str


@dataclass(frozen=True)
class Verdict:
    obeys: bool
    counterexample: Counterexample | None = None


def reachable(a: Automaton) -> tuple[int, ...]:
    """Sorted ids of states reachable from the initial state."""
    seen = {a.initial}
    frontier = [a.initial]
    while frontier:
        nxt = []
        for s in frontier:
            for t in a.next[s - 1]:
                if t not in seen:
                    seen.add(t)
                    nxt.append(t)
        frontier = nxt
    return tuple(sorted(seen))


def _starts(a: Automaton, prime: bool) -> tuple[int, ...]:
    return reachable(a) if prime else (a.initial,)


def _verdict(a: Automaton, candidates: list) -> Verdict:
    if not candidates:
        return Verdict(True)
    _, start, trace, reason = min(candidates)
    return Verdict(False, Counterexample(start, run(a, start, trace), reason))


def _label_set(a: Automaton, ctx: Context) -> str:
    return "{" + ",".join(a.structure.observables[m].label for m in ctx.members) + "}"


def _context_witness(a: Automaton, start: int, ctx: Context):
    """Lex-least shortest violating trace for one context monitor, or None."""
    members = ctx.members
    root = (start, (0, 0, 0))
    paths = {root: ()}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        s, rec = node
        path = paths[node]
        for mi, obs in enumerate(members):
            v = a.values[s - 1][obs]
            if rec[mi] == 0:
                nrec = rec[:mi] + (v,) + rec[mi + 1 :]
                if 0 not in nrec and nrec[0] * nrec[1] * nrec[2] != ctx.parity:
                    label = _label_set(a, ctx)
                    return path + (obs,), (
                        f"context {label}: recorded product "
                        f"{nrec[0] * nrec[1] * nrec[2]:+d}, required {ctx.parity:+d}"
                    )
            elif rec[mi] != v:
                name = a.structure.observables[obs].label
                return path + (obs,), (
                    f"context {_label_set(a, ctx)}: {name} repeated "
                    f"with a different value"
                )
            else:
                nrec = rec
            child = (a.next[s - 1][obs], nrec)
            if child not in paths:
                paths[child] = path + (obs,)
                queue.append(child)
    return None


def check_context(a: Automaton, prime: bool = False) -> Verdict:
    candidates = []
    for start in _starts(a, prime):
        for ctx in a.structure.contexts:
            hit = _context_witness(a, start, ctx)
            if hit:
                trace, reason = hit
                candidates.append((len(trace), start, trace, reason))
    return _verdict(a, candidates)


def _compat_alphabet(a: Automaton, y: int) -> list[int]:
    return [x for x in range(a.structure.n) if a.structure.compat[y][x]]


def check_compat(a: Automaton, prime: bool = False) -> Verdict:
    candidates = []
    for start in _starts(a, prime):
        for y in range(a.structure.n):
            v, s1 = a.values[start - 1][y], a.next[start - 1][y]
            alphabet = _compat_alphabet(a, y)
            paths = {s1: ()}
            queue = deque([s1])
            hit = None
            while queue and hit is None:
                s = queue.popleft()
                if a.values[s - 1][y] != v:
                    w = a.values[s - 1][y]
                    name = a.structure.observables[y].label
                    trace = (y,) + paths[s] + (y,)
                    hit = (trace, f"{name} gives {v:+d} then {w:+d} across a "
                                  f"{name}-compatible interlude")
                    break
                for x in alphabet:
                    t = a.next[s - 1][x]
                    if t not in paths:
                        paths[t] = paths[s] + (x,)
                        queue.append(t)
            if hit:
                trace, reason = hit
                candidates.append((len(trace), start, trace, reason))
    return _verdict(a, candidates)


def check_rc(a: Automaton, prime: bool = False) -> Verdict:
    candidates = []
    for start in _starts(a, prime):
        for ctx in a.structure.contexts:
            for perm in sorted(itertools.permutations(ctx.members)):
                rec = run(a, start, perm)
                prod = rec.outputs[0] * rec.outputs[1] * rec.outputs[2]
                if prod != ctx.parity:
                    reason = (
                        f"sequence over {_label_set(a, ctx)}: output product "
                        f"{prod:+d}, required {ctx.parity:+d}"
                    )
                    candidates.append((3, start, perm, reason))
    return _verdict(a, candidates)


def check_repeat(a: Automaton, prime: bool = False) -> Verdict:
    candidates = []
    for start in _starts(a, prime):
        for y in range(a.structure.n):
            v, s1 = a.values[start - 1][y], a.next[start - 1][y]
            if a.values[s1 - 1][y] != v:
                name = a.structure.observables[y].label
                reason = f"{name}: immediate repetition changed the value"
                candidates.append((2, start, (y, y), reason))
    return _verdict(a, candidates)


def check_all(a: Automaton, prime: bool = False) -> Verdict:
    codes = [p.code for p in a.structure.observables]
    candidates = []
    for start in _starts(a, prime):
        root = (start, oracle.MIXED)
        paths = {root: ()}
        queue = deque([root])
        hit = None
        while queue and hit is None:
            node = queue.popleft()
            s, q = node
            path = paths[node]
            for j, code in enumerate(codes):
                v = a.values[s - 1][j]
                pr = oracle.predict(q, code)
                if pr.deterministic and pr.outcome != v:
                    name = a.structure.observables[j].label
                    hit = (path + (j,),
                           f"certain outcome {name}={pr.outcome:+d} answered {v:+d}")
                    break
                child = (a.next[s - 1][j], oracle.collapse(q, code, v))
                if child not in paths:
                    paths[child] = path + (j,)
                    queue.append(child)
        if hit:
            trace, reason = hit
            candidates.append((len(trace), start, trace, reason))
    return _verdict(a, candidates)


def check(a: Automaton, family: str) -> Verdict:
    fam = family.strip().lower()
    table = {
        "rc": (check_rc, False),
        "repeat": (check_repeat, False),
        "context": (check_context, False),
        "compat": (check_compat, False),
        "context'": (check_context, True),
        "compat'": (check_compat, True),
        "all": (check_all, False),
        "all'": (check_all, True),
    }
    if fam not in table:
        raise ValueError(f"unknown constraint family {family!r}")
    fn, prime = table[fam]
    return fn(a, prime)


# --- explicit enumeration, used only as a validation oracle in tests ---------


def _bf_context(a: Automaton, start: int, depth: int):
    ctxs = a.structure.contexts
    codes = [p.code for p in a.structure.observables]

    def rec(s, q, trace, used, remaining):
        for j in sorted({m for c in ctxs if used <= set(c.members) for m in c.members}):
            v = a.values[s - 1][j]
            try:
                q2 = oracle.collapse(q, codes[j], v)
            except oracle.ContradictionError:
                return trace + (j,)
            if remaining > 1:
                hit = rec(a.next[s - 1][j], q2, trace + (j,), used | {j}, remaining - 1)
                if hit:
                    return hit
        return None

    for length in range(1, depth + 1):
        hit = rec(start, oracle.MIXED, (), set(), length)
        if hit:
            return hit
    return None


def _bf_compat(a: Automaton, start: int, depth: int):
    def rec(y, v, s, trace, remaining):
        if remaining == 0:
            return trace + (y,) if a.values[s - 1][y] != v else None
        for x in _compat_alphabet(a, y):
            hit = rec(y, v, a.next[s - 1][x], trace + (x,), remaining - 1)
            if hit:
                return hit
        return None

    for length in range(2, depth + 1):
        for y in range(a.structure.n):
            v, s1 = a.values[start - 1][y], a.next[start - 1][y]
            hit = rec(y, v, s1, (y,), length - 2)
            if hit:
                return hit
    return None


def _bf_all(a: Automaton, start: int, depth: int):
    codes = [p.code for p in a.structure.observables]

    def rec(s, q, trace, remaining):
        for j in range(a.structure.n):
            v = a.values[s - 1][j]
            try:
                q2 = oracle.collapse(q, codes[j], v)
            except oracle.ContradictionError:
                return trace + (j,)
            if remaining > 1:
                hit = rec(a.next[s - 1][j], q2, trace + (j,), remaining - 1)
                if hit:
                    return hit
        return None

    for length in range(1, depth + 1):
        hit = rec(start, oracle.MIXED, (), length)
        if hit:
            return hit
    return None


def bounded_bruteforce(a: Automaton, family: str, depth: int) -> Verdict:
    """Checks every family sequence up to ``depth`` explicitly against the
    quantum oracle (or endpoint equality for the compatibility family)."""
    fam = family.strip().lower()
    base = fam.rstrip("'")
    prime = fam.endswith("'")
    if base in ("rc", "repeat"):
        v = (check_rc if base == "rc" else check_repeat)(a, prime)
        if not v.obeys and len(v.counterexample.record.inputs) > depth:
            return Verdict(True)
        return v
    finder = {"context": _bf_context, "compat": _bf_compat, "all": _bf_all}[base]
    candidates = []
    for start in _starts(a, prime):
        trace = finder(a, start, depth)
        if trace:
            candidates.append((len(trace), start, trace, "bruteforce"))
    return _verdict(a, candidates)
