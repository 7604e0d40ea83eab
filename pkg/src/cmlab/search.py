"""Exhaustive search for machines that pass the sequential-constraint checkers.

The search enumerates complete value/update tables for a given state count k
over the 3x3 structure, pruning with constraint propagation and with partial
monitor replay after every assignment.  Symmetry reductions:

- relabeling: update targets are numbered by first appearance, with the
  initial state fixed as state 1;
- sign flips: value masks that touch every context an even number of times;
- square maps: row permutations and the swap of the two like-parity columns.

The sign and square maps together form a group of 192 table symmetries; the
first value table is only branched over orbit representatives.  Every leaf the
engine emits is re-verified with the reference checkers before it is reported,
and results are deduplicated by canonical form.  ``classes`` additionally
groups results under free relabeling (any state may become the initial one),
which is the equivalence used for census counts.

Two engines implement the identical branch order: a compiled extension and a
pure-Python twin (env CMLAB_PURE_SEARCH=1 forces the latter).  Node counts and
emitted leaves are byte-identical between them.  Parallel find-all runs split
the tree at a fixed frontier into deterministic, order-preserving chunks, so
output does not depend on the worker count.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from itertools import permutations
from multiprocessing import Pool
from typing import NamedTuple, Optional

from . import checker
from .automaton import Automaton
from .observables import Structure, build_pm_square

SEARCH_FAMILIES = ("rc", "repeat", "context", "compat", "context'", "compat'")

RESTRICTIONS = ("three-contradictions",)


class Symmetry(NamedTuple):
    """One table symmetry: new table entry o takes old entry src[o] times mask[o]."""

    src: tuple
    mask: tuple


@dataclass(frozen=True)
class SearchProblem:
    k: int
    families: tuple
    structure: str = "pm"
    find_all: bool = False
    restriction: Optional[str] = None
    relabel: bool = True
    signs: bool = True
    perms: bool = True
    propagators: bool = True
    budget_nodes: int = 0
    budget_seconds: float = 0.0
    jobs: int = 0


@dataclass(frozen=True)
class SearchOutcome:
    status: str  # "found" | "exhausted" | "unfinished"
    k: int
    nodes: int
    automata: tuple
    classes: tuple
    engine: str


@dataclass(frozen=True)
class MemoryCost:
    status: str  # "found" | "exhausted" | "unfinished"
    k: int
    bits: Optional[float]
    nodes: int
    trail: tuple  # (k, status, nodes) per tried size


@dataclass(frozen=True)
class PropagateResult:
    consistent: bool
    values: tuple
    nexts: tuple
    rule: Optional[str]


# --- symmetry group -----------------------------------------------------------


def _even_masks(structure: Structure):
    masks = []
    for bits in range(1 << structure.n):
        m = tuple(-1 if (bits >> o) & 1 else 1 for o in range(structure.n))
        if all(
            m[a] * m[b] * m[c] == 1
            for (a, b, c) in (ctx.members for ctx in structure.contexts)
        ):
            masks.append(m)
    return masks


def _grid_perms(structure: Structure):
    grid = structure.grid
    ctx_sets = {
        frozenset(ctx.members): ctx.parity for ctx in structure.contexts
    }
    out = []
    for sigma in permutations(range(3)):
        for tau in ((0, 1, 2), (1, 0, 2)):
            src = [0] * structure.n
            for r in range(3):
                for c in range(3):
                    src[grid[r][c]] = grid[sigma[r]][tau[c]]
            src = tuple(src)
            for members, parity in ctx_sets.items():
                image = frozenset(src[o] for o in members)
                assert ctx_sets[image] == parity
            out.append(src)
    return out


def value_group(structure: Structure = None, signs: bool = True, perms: bool = True):
    """Table symmetries compatible with the declared constraint families."""
    if structure is None:
        structure = build_pm_square()
    identity = tuple(range(structure.n))
    ones = (1,) * structure.n
    masks = _even_masks(structure) if signs else [ones]
    srcs = _grid_perms(structure) if perms else [identity]
    group = [Symmetry(src, mask) for src in srcs for mask in masks]
    assert len({(g.src, g.mask) for g in group}) == len(group)
    return tuple(group)


def transform(a: Automaton, sym: Symmetry) -> Automaton:
    values = tuple(
        tuple(sym.mask[o] * row[sym.src[o]] for o in range(a.structure.n))
        for row in a.values
    )
    nxt = tuple(
        tuple(row[sym.src[o]] for o in range(a.structure.n)) for row in a.next
    )
    return Automaton(a.structure, a.k, values, nxt, a.initial)


def canonical_first_tables(structure: Structure = None, signs: bool = True,
                           perms: bool = True):
    """Lexicographically minimal orbit representatives of all 512 value rows."""
    if structure is None:
        structure = build_pm_square()
    group = value_group(structure, signs, perms)
    n = structure.n
    reps = []
    for bits in range(1 << n):
        t = tuple(1 - 2 * ((bits >> o) & 1) for o in range(n))
        best = min(
            tuple(g.mask[o] * t[g.src[o]] for o in range(n)) for g in group
        )
        if best == t:
            reps.append(t)
    return tuple(sorted(reps))


def encode(a: Automaton) -> tuple:
    flat = [a.initial]
    for row in a.values:
        flat.extend(row)
    for row in a.next:
        flat.extend(row)
    return tuple(flat)


def renumber(a: Automaton, root: int) -> Optional[Automaton]:
    """Relabel states by breadth-first discovery from root; None if not all reachable."""
    order = [root]
    seen = {root}
    i = 0
    while i < len(order):
        s = order[i]
        i += 1
        for t in a.next[s - 1]:
            if t not in seen:
                seen.add(t)
                order.append(t)
    if len(order) < a.k:
        return None
    newid = {old: idx + 1 for idx, old in enumerate(order)}
    values = tuple(a.values[old - 1] for old in order)
    nxt = tuple(
        tuple(newid[t] for t in a.next[old - 1]) for old in order
    )
    return Automaton(a.structure, a.k, values, nxt, 1)


def _relabeled(a: Automaton, perm, initial: int) -> Automaton:
    """perm maps old id i to new id perm[i-1]; initial is the old start id."""
    values = [None] * a.k
    nxt = [None] * a.k
    for old in range(1, a.k + 1):
        values[perm[old - 1] - 1] = a.values[old - 1]
        nxt[perm[old - 1] - 1] = tuple(perm[t - 1] for t in a.next[old - 1])
    return Automaton(a.structure, a.k, tuple(values), tuple(nxt),
                     perm[initial - 1])


def canonicalize(a: Automaton, free: bool = False, signs: bool = True,
                 perms: bool = True, relabel: bool = True) -> Automaton:
    """Minimal-encoding representative of a's orbit.

    free=False keeps the initial state as state 1; free=True also minimizes
    over the choice of start state, the equivalence used for the census.
    States are never dropped: unreachable states still constrain the
    every-start checkers, so two machines are equivalent only as whole tables.
    Discovery-order numbering covers the relabelings when the start reaches
    every state; otherwise all state bijections are tried directly, and the
    two regimes can never collide because reachability is orbit-invariant.
    """
    group = value_group(a.structure, signs, perms)
    best = None
    for g in group:
        b = transform(a, g)
        if not relabel:
            cands = [b]
        else:
            roots = range(1, a.k + 1) if free else [b.initial]
            cands = [renumber(b, r) for r in roots]
        for c in cands:
            if c is None:
                continue
            key = encode(c)
            if best is None or key < best[0]:
                best = (key, c)
    if best is None:
        inits = range(1, a.k + 1) if free else [a.initial]
        for g in group:
            b = transform(a, g)
            for perm in permutations(range(1, a.k + 1)):
                for init in inits:
                    if not free and perm[init - 1] != 1:
                        continue
                    c = _relabeled(b, perm, init)
                    if free and c.initial != 1:
                        continue
                    key = encode(c)
                    if best is None or key < best[0]:
                        best = (key, c)
    return best[1]


# --- table-level ops ----------------------------------------------------------


def contradiction_count(values_row, structure: Structure = None) -> int:
    """Number of contexts whose value product differs from the required parity."""
    if structure is None:
        structure = build_pm_square()
    row = tuple(values_row)
    if len(row) != structure.n or any(v not in (1, -1) for v in row):
        raise ValueError("need a complete row of +1/-1 values")
    bad = 0
    for ctx in structure.contexts:
        prod = 1
        for m in ctx.members:
            prod *= row[m]
        if prod != ctx.parity:
            bad += 1
    return bad


def propagate(values, nexts, structure: Structure = None) -> PropagateResult:
    """Apply the necessary-condition rules to partial tables (0 = undecided).

    Premise: the machine must pass the same-context checker from every state,
    with every state reachable.  Under that premise each rule is necessary, so
    a refutation certifies that no completion can pass.  Rules: C1 (an update
    target must repeat the stored value), R3 (a state whose value for some
    observable is unique across all states keeps to itself on that row and
    column), R4 (a contradicted context allows at most one self-loop), R5
    (a contradicted context needs two escape targets, and two further states
    that disagree on it).
    """
    if structure is None:
        structure = build_pm_square()
    n = structure.n
    k = len(values)
    T = [v for row in values for v in row]
    U = [t for row in nexts for t in row]
    if len(U) != k * n:
        raise ValueError("values and nexts must have the same shape")
    if any(v not in (1, 0, -1) for v in T):
        raise ValueError("values must be +1, -1, or 0 for undecided")
    if any(t < 0 or t > k for t in U):
        raise ValueError("next-state entries must be 0..k")

    members = [ctx.members for ctx in structure.contexts]
    parity = [ctx.parity for ctx in structure.contexts]
    grid = structure.grid
    rowcol = {}
    for r in range(3):
        for c in range(3):
            o = grid[r][c]
            rowcol[o] = tuple(sorted(set(grid[r]) | {grid[rr][c] for rr in range(3)}))

    def rows():
        vals = tuple(tuple(T[i * n:(i + 1) * n]) for i in range(k))
        nxt = tuple(tuple(U[i * n:(i + 1) * n]) for i in range(k))
        return vals, nxt

    def fail(rule):
        vals, nxt = rows()
        return PropagateResult(False, vals, nxt, rule)

    def contr(i, c):
        prod = 1
        for m in members[c]:
            v = T[i * n + m]
            if v == 0:
                return -1
            prod *= v
        return 1 if prod != parity[c] else 0

    while True:
        changed = False
        # C1: following an update must reproduce the recorded value
        for o in range(n):
            for i in range(k):
                j = U[i * n + o]
                if j == 0:
                    continue
                a, b = T[i * n + o], T[(j - 1) * n + o]
                if a and b:
                    if a != b:
                        return fail("C1")
                elif a:
                    T[(j - 1) * n + o] = a
                    changed = True
                elif b:
                    T[i * n + o] = b
                    changed = True
        # R3: globally unique values pin the whole row and column
        for o in range(n):
            col = [T[i * n + o] for i in range(k)]
            if 0 in col:
                continue
            for i in range(k):
                if any(col[j] == col[i] for j in range(k) if j != i):
                    continue
                for x in rowcol[o]:
                    u = U[i * n + x]
                    if u == 0:
                        U[i * n + x] = i + 1
                        changed = True
                    elif u != i + 1:
                        return fail("R3")
        if not changed:
            break

    for i in range(k):
        for c in range(len(members)):
            if contr(i, c) != 1:
                continue
            stays = sum(1 for m in members[c] if U[i * n + m] == i + 1)
            if stays >= 2:
                return fail("R4")
            targets = set()
            undecided = 0
            for m in members[c]:
                u = U[i * n + m]
                if u == 0:
                    undecided += 1
                elif u != i + 1:
                    targets.add(u)
            if len(targets) + undecided < 2:
                return fail("R5")
            marks = [contr(j, c) for j in range(k)]
            if -1 in marks:
                continue
            good = [j for j in range(k) if marks[j] == 0]
            if not any(
                sum(1 for m in members[c] if T[x * n + m] != T[y * n + m]) >= 2
                for xi, x in enumerate(good)
                for y in good[xi + 1:]
            ):
                return fail("R5")

    vals, nxt = rows()
    return PropagateResult(True, vals, nxt, None)


# --- engine plumbing ----------------------------------------------------------


def _load_engine():
    if not os.environ.get("CMLAB_PURE_SEARCH"):
        try:
            from . import _searchcore
            return _searchcore, "compiled"
        except ImportError:
            pass
    from . import _searchpy
    return _searchpy, "pure"


def _engine_by_name(name):
    if name == "compiled":
        from . import _searchcore
        return _searchcore
    from . import _searchpy
    return _searchpy


def _run_task(task):
    name, cfg, snapshots = task
    return _engine_by_name(name).run_batch(cfg, snapshots)


def _drive(engine, engine_name, cfg, structure, problem, jobs):
    """Run the engine, splitting the tree below the first update row.

    The split is used for every state count >= 2 regardless of the worker
    count, and per-snapshot results are consumed in snapshot order with the
    same stopping rule either way, so status, leaves, and node totals do not
    depend on jobs or on chunking.  The node budget applies to the shared
    prefix and to each subtree separately.  The reported node count
    reproduces the single-pass depth-first total: subtree work is added in
    snapshot order up to the terminal event (first hit for find-first runs,
    or a budget abort).
    """
    if problem.k < 2:
        unfinished, leaves, nodes, _ = engine.run_search(cfg)
        return unfinished, leaves, nodes

    first = dict(cfg)
    first["frontier"] = True
    first["frontier_pos"] = 1 + structure.n
    unfinished, leaves, phase_nodes, snapshots = engine.run_search(first)
    assert not leaves
    if unfinished or not snapshots:
        return unfinished, [], phase_nodes

    prefix_nodes = [snap[4] for snap in snapshots]

    def scan(results):
        """results: per-snapshot (unfinished, leaves, nodes) in snapshot order."""
        total = 0
        out = []
        unf_all = False
        for i, (unf, lv, nd) in enumerate(results):
            total += nd
            out.extend(lv)
            if unf and not problem.find_all:
                return True, out, prefix_nodes[i] + total
            unf_all = unf_all or unf
            if lv and not problem.find_all:
                return False, out, prefix_nodes[i] + total
        return unf_all, out, phase_nodes + total

    if jobs > 1:
        chunk = max(1, min(64, len(snapshots) // (jobs * 4)))
        tasks = [
            (engine_name, cfg, [s[:4] for s in snapshots[i:i + chunk]])
            for i in range(0, len(snapshots), chunk)
        ]
        # leaving the pool context terminates workers, which implements the
        # early stop after scan returns mid-iteration
        with Pool(processes=jobs) as pool:
            unfinished, leaves, nodes = scan(
                res
                for batch in pool.imap(_run_task, tasks, chunksize=1)
                for res in batch
            )
    else:
        eng_mod = _engine_by_name(engine_name)
        unfinished, leaves, nodes = scan(
            iter(eng_mod.run_batch(cfg, [s[:4] for s in snapshots]))
        )
    return unfinished, leaves, nodes


def _config(problem: SearchProblem, structure: Structure, deadline: float):
    fams = problem.families
    grid = structure.grid
    rowcol = []
    pos = {grid[r][c]: (r, c) for r in range(3) for c in range(3)}
    for o in range(structure.n):
        r, c = pos[o]
        rowcol.append(tuple(sorted(set(grid[r]) | {grid[rr][c] for rr in range(3)})))
    compat = tuple(
        tuple(sorted({x for x in range(structure.n) if structure.compat[y][x]} | {y}))
        for y in range(structure.n)
    )
    ctx_mode = 2 if "context'" in fams else (1 if "context" in fams else 0)
    compat_mode = 2 if "compat'" in fams else (1 if "compat" in fams else 0)
    use_prime = ctx_mode == 2 or compat_mode == 2
    t1 = canonical_first_tables(structure, problem.signs, problem.perms)
    if problem.restriction == "three-contradictions":
        t1 = tuple(r for r in t1 if contradiction_count(r, structure) == 3)
    return {
        "k": problem.k,
        "n": structure.n,
        "ctx_members": tuple(ctx.members for ctx in structure.contexts),
        "ctx_parity": tuple(ctx.parity for ctx in structure.contexts),
        "compat": compat,
        "rowcol": tuple(rowcol),
        "t1_candidates": t1,
        "has_rc": "rc" in fams,
        "has_repeat": "repeat" in fams,
        "ctx_mode": ctx_mode,
        "compat_mode": compat_mode,
        "use_c1": problem.propagators and use_prime,
        "use_rules": problem.propagators and ctx_mode == 2,
        "relabel": problem.relabel,
        "find_all": problem.find_all,
        "max_nodes": problem.budget_nodes,
        "deadline": deadline,
    }


def _resolve_jobs(problem: SearchProblem) -> int:
    if problem.jobs:
        return problem.jobs
    env = os.environ.get("CMLAB_JOBS")
    if env:
        return max(1, int(env))
    return 1


def search(problem: SearchProblem) -> SearchOutcome:
    """Run the search and report checker-verified, canonicalized results.

    The three-contradictions restriction keeps only first-table candidates
    with exactly three contradicted contexts.  For refuting a state count this
    loses nothing once every smaller count is exhausted: relabel a supposed
    machine so the three-contradiction state is state 1, and its transition
    closure is either everything (covered here) or a smaller machine already
    ruled out.  Pinning the table to state 1 is also what makes the restricted
    run cheap, since a triply contradicted first table propagates hard.
    """
    if problem.structure != "pm":
        raise ValueError("search supports only the pm structure")
    if problem.k < 1:
        raise ValueError("state count must be positive")
    bad = [f for f in problem.families if f not in SEARCH_FAMILIES]
    if bad or not problem.families:
        raise ValueError(f"searchable families are {SEARCH_FAMILIES}")
    if problem.restriction is not None and problem.restriction not in RESTRICTIONS:
        raise ValueError(f"restrictions are {RESTRICTIONS}")

    structure = build_pm_square()
    deadline = time.time() + problem.budget_seconds if problem.budget_seconds else 0.0
    cfg = _config(problem, structure, deadline)
    engine, engine_name = _load_engine()
    jobs = _resolve_jobs(problem)

    unfinished, leaves, nodes = _drive(engine, engine_name, cfg, structure,
                                       problem, jobs)

    automata = {}
    for flat_t, flat_u in leaves:
        n = structure.n
        values = tuple(tuple(flat_t[i * n:(i + 1) * n]) for i in range(problem.k))
        nxt = tuple(tuple(flat_u[i * n:(i + 1) * n]) for i in range(problem.k))
        a = Automaton(structure, problem.k, values, nxt, 1)
        for fam in problem.families:
            verdict = checker.check(a, fam)
            assert verdict.obeys, (fam, a)
        if problem.restriction == "three-contradictions":
            assert any(contradiction_count(row) == 3 for row in a.values)
        rep = canonicalize(a, free=False, signs=problem.signs,
                           perms=problem.perms, relabel=problem.relabel)
        automata[encode(rep)] = rep

    classes = {}
    for rep in automata.values():
        free_rep = canonicalize(rep, free=True, signs=problem.signs,
                                perms=problem.perms, relabel=problem.relabel)
        classes.setdefault(encode(free_rep), free_rep)

    if unfinished:
        status = "unfinished"
    elif automata:
        status = "found"
    else:
        status = "exhausted"
    return SearchOutcome(
        status=status,
        k=problem.k,
        nodes=nodes,
        automata=tuple(automata[key] for key in sorted(automata)),
        classes=tuple(classes[key] for key in sorted(classes)),
        engine=engine_name,
    )


def memory_cost(families, k_max: int = 6, restriction: Optional[str] = None,
                jobs: int = 0, budget_nodes: int = 0,
                budget_seconds: float = 0.0) -> MemoryCost:
    """Smallest state count admitting a machine for the families, as log2 bits.

    Tries k = 1, 2, ... in turn, so a hit at k certifies minimality among all
    machines, including those that do not use all their states.
    """
    trail = []
    nodes = 0
    for k in range(1, k_max + 1):
        outcome = search(SearchProblem(
            k=k, families=tuple(families), restriction=restriction,
            jobs=jobs, budget_nodes=budget_nodes, budget_seconds=budget_seconds,
        ))
        nodes += outcome.nodes
        trail.append((k, outcome.status, outcome.nodes))
        if outcome.status == "unfinished":
            return MemoryCost("unfinished", k, None, nodes, tuple(trail))
        if outcome.status == "found":
            return MemoryCost("found", k, math.log2(k), nodes, tuple(trail))
    return MemoryCost("exhausted", k_max, None, nodes, tuple(trail))
