"""Command-line front end: verify, search, chi, bound, squares, build10,
oracle, reproduce.

Exit codes: 0 positive result (obeys, found, possible, lemma true, all PASS),
1 negative result, 2 usage or input error.  The default `records` output mode
prints one space-separated key=value line per logical result and is
byte-identical across runs and worker counts; `human` mode may add timings.
"""

from __future__ import annotations

import argparse
import math
import sys
import time

from . import checker, inequality, oracle, search
from .automaton import (
    Automaton,
    FormatError,
    build_ten_state,
    build_ten_state_details,
    builtin,
    parse,
    serialize,
)
from .observables import build_extended_square, build_pm_square, structure_by_name


class InputError(ValueError):
    pass


def _load_automaton(path: str) -> Automaton:
    if path.startswith("builtin:"):
        name = path.split(":", 1)[1]
        if name == "A10":
            return build_ten_state()
        try:
            return builtin(name)
        except ValueError as e:
            raise InputError(str(e))
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}")
    try:
        return parse(text)
    except (FormatError, ValueError) as e:
        raise InputError(f"{path}: {e}")


def _parse_trace(structure, text: str):
    by_label = {p.label: j for j, p in enumerate(structure.observables)}
    trace = []
    for item in text.split(","):
        item = item.strip()
        if len(item) < 2 or item[-1] not in "+-":
            raise InputError(f"trace item {item!r} is not <label><sign>")
        label, sign = item[:-1], 1 if item[-1] == "+" else -1
        if label not in by_label:
            raise InputError(f"unknown observable {label!r}")
        trace.append((by_label[label], sign))
    if not trace:
        raise InputError("empty trace")
    return trace


def _trace_string(a: Automaton, inputs, outputs) -> str:
    labels = a.structure.labels()
    return ",".join(
        f"{labels[o]}{'+' if v > 0 else '-'}" for o, v in zip(inputs, outputs)
    )


def _verdict_fields(a: Automaton, verdict) -> str:
    if verdict.obeys:
        return "verdict=obeys"
    ce = verdict.counterexample
    trace = _trace_string(a, ce.record.inputs, ce.record.outputs)
    return f'verdict=violates start={ce.start} trace={trace} reason="{ce.reason}"'


# --- subcommands ---------------------------------------------------------------


def _cmd_verify(args) -> int:
    a = _load_automaton(args.automaton)
    if args.family not in checker.FAMILIES:
        raise InputError(f"family must be one of {', '.join(checker.FAMILIES)}")
    initials = range(1, a.k + 1) if args.all_initial_states else [a.initial]
    ok = True
    for s in initials:
        b = Automaton(a.structure, a.k, a.values, a.next, s)
        v = checker.check(b, args.family)
        ok = ok and v.obeys
        if args.output == "records":
            print(f"family={args.family} initial={s} {_verdict_fields(b, v)}")
        elif v.obeys:
            print(f"initial state {s}: obeys {args.family}")
        else:
            ce = v.counterexample
            trace = _trace_string(b, ce.record.inputs, ce.record.outputs)
            print(
                f"initial state {s}: violates {args.family} from state "
                f"{ce.start} on {trace} ({ce.reason})"
            )
    return 0 if ok else 1


def _cmd_search(args) -> int:
    families = tuple(f.strip() for f in args.families.split(",") if f.strip())
    problem = search.SearchProblem(
        k=args.states,
        families=families,
        structure=args.structure,
        find_all=args.find_all,
        restriction=args.restrict,
        jobs=args.jobs,
        budget_nodes=args.budget_nodes,
        budget_seconds=args.budget_seconds,
    )
    try:
        outcome = search.search(problem)
    except ValueError as e:
        raise InputError(str(e))
    for a in outcome.automata:
        sys.stdout.write(serialize(a))
        print()
    print(
        f"status={outcome.status} k={outcome.k} "
        f"count={len(outcome.automata)} nodes={outcome.nodes}"
    )
    return 0 if outcome.status == "found" else 1


def _cmd_chi(args) -> int:
    a = _load_automaton(args.automaton)
    initial = args.initial if args.initial is not None else a.initial
    if not 1 <= initial <= a.k:
        raise InputError(f"initial state must be 1..{a.k}")
    try:
        r = inequality.chi_automaton(a, initial)
    except ValueError as e:
        raise InputError(str(e))
    terms = ",".join(f"{t:+d}" for t in r.per_context)
    extra = ""
    if args.all_orders:
        lo, hi = inequality.chi_spread(a, initial)
        extra = f" low={lo} high={hi}"
    if args.output == "records":
        print(
            f"value={r.value} terms={terms} "
            f"noncontextual={r.bound_noncontextual} "
            f"quantum={r.bound_quantum}{extra}"
        )
    else:
        print(
            f"chi = {r.value} (terms {terms}; noncontextual max "
            f"{r.bound_noncontextual}, quantum {r.bound_quantum})"
        )
        if args.all_orders:
            print(f"over all member orders: low {lo}, high {hi}")
    return 0


def _cmd_bound(args) -> int:
    structure = structure_by_name(args.structure)
    mx = inequality.noncontextual_max(structure)
    q = len(structure.contexts)
    if args.output == "records":
        print(f"max={mx} quantum={q}")
    else:
        print(f"noncontextual max {mx}, quantum {q}")
    return 0


def _cmd_squares(args) -> int:
    if not args.lemma:
        raise InputError("nothing to do: pass --lemma")
    rep = inequality.three_contradiction_square_lemma()
    hist = ",".join(str(c) for c in rep.histogram)
    if args.output == "records":
        print(
            f"lemma={'true' if rep.holds else 'false'} "
            f"assignments={rep.assignments} squares={rep.squares} "
            f"histogram={hist}"
        )
    else:
        word = "every" if rep.holds else "NOT every"
        print(
            f"{word} assignment of the {rep.assignments} forces some of the "
            f"{rep.squares} squares to 3+ violations (histogram {hist})"
        )
    return 0 if rep.holds else 1


def _cmd_build10(args) -> int:
    a, names, overrides = build_ten_state_details()
    if args.details:
        ov = (
            ",".join(f"{s}:{a.structure.labels()[o]}" for s, o in overrides)
            or "none"
        )
        print(f"states={a.k} overrides={ov}")
        for i, name in enumerate(names, start=1):
            print(f'state={i} name="{name}"')
    sys.stdout.write(serialize(a))
    return 0


def _cmd_oracle(args) -> int:
    if args.what != "trace":
        raise InputError("usage: oracle trace <structure> <trace-string>")
    structure = structure_by_name(args.structure)
    trace = _parse_trace(structure, args.trace)
    codes = [(structure.observables[o].code, v) for o, v in trace]
    possible = oracle.trace_possible(oracle.MIXED, codes)
    if args.output == "records":
        print(f"trace={args.trace} possible={'true' if possible else 'false'}")
    else:
        print("possible" if possible else "impossible")
    return 0 if possible else 1


# --- reproduce -----------------------------------------------------------------


def _rep_parities():
    pm = build_pm_square()
    ext = build_extended_square()
    minus_pm = [c for c in pm.contexts if c.parity == -1]
    minus_ext = [c for c in ext.contexts if c.parity == -1]
    ok = (
        len(pm.contexts) == 6
        and len(ext.contexts) == 15
        and len(minus_pm) == 1
        and len(minus_ext) == 3
    )
    return ok, f"pm_contexts=6 extended_contexts=15 minus_trios={len(minus_ext)}"


def _rep_oracle_equivalence():
    import itertools
    import random

    pm = build_pm_square()
    ext = build_extended_square()
    for length in range(1, 5):
        for obs in itertools.product(range(pm.n), repeat=length):
            for signbits in range(1 << length):
                trace = [
                    (pm.observables[o].code, 1 - 2 * ((signbits >> i) & 1))
                    for i, o in enumerate(obs)
                ]
                if oracle.trace_possible(oracle.MIXED, trace) != \
                        oracle.dense_oracle_check(trace):
                    return False, f"disagree on pm trace {trace}"
    rng = random.Random(20240814)
    for _ in range(10000):
        length = rng.randint(1, 8)
        trace = [
            (ext.observables[rng.randrange(ext.n)].code, rng.choice((1, -1)))
            for _ in range(length)
        ]
        if oracle.trace_possible(oracle.MIXED, trace) != \
                oracle.dense_oracle_check(trace):
            return False, f"disagree on extended trace {trace}"
    return True, "pm_exhaustive_len=4 extended_random=10000"


def _rep_bounds():
    mpm = inequality.noncontextual_max(build_pm_square())
    mext = inequality.noncontextual_max(build_extended_square())
    return (mpm, mext) == (4, 9), f"pm_max={mpm} extended_max={mext}"


def _rep_a3():
    a3 = builtin("A3")
    chis = [inequality.chi_automaton(a3, s).value for s in (1, 2, 3)]
    ctx = checker.check_context(a3, prime=True)
    cmp_ = checker.check_compat(a3, prime=True)
    ok = (
        chis == [6, 6, 6]
        and ctx.obeys
        and not cmp_.obeys
        and len(cmp_.counterexample.record.inputs) <= 4
        and cmp_.counterexample.record.inputs[0]
        == cmp_.counterexample.record.inputs[-1]
    )
    ce = _trace_string(
        a3, cmp_.counterexample.record.inputs, cmp_.counterexample.record.outputs
    )
    return ok, f"chi={chis[0]},{chis[1]},{chis[2]} compat_counterexample={ce}"


def _rep_theorem1(jobs):
    o2 = search.search(
        search.SearchProblem(k=2, families=("rc", "repeat"), jobs=jobs)
    )
    o3 = search.search(
        search.SearchProblem(k=3, families=("context'",), find_all=True, jobs=jobs)
    )
    a3_class = search.encode(search.canonicalize(builtin("A3"), free=True))
    has_a3 = a3_class in {search.encode(c) for c in o3.classes}
    ok = o2.status == "exhausted" and o3.status == "found" and has_a3
    return ok, (
        f"k2_rc_repeat={o2.status} k3_context={o3.status} "
        f"k3_classes={len(o3.classes)} contains_a3={'yes' if has_a3 else 'no'} "
        f"m_context={math.log2(3):.3f}"
    )


def _rep_theorem2(jobs, budget_seconds):
    o3 = search.search(
        search.SearchProblem(
            k=3,
            families=("context'", "compat'"),
            jobs=jobs,
            budget_seconds=budget_seconds,
        )
    )
    a4 = builtin("A4")
    ctx = checker.check_context(a4, prime=True).obeys
    cmp_ = checker.check_compat(a4, prime=True).obeys
    ok = o3.status == "exhausted" and ctx and cmp_
    return ok, (
        f"k3_both={o3.status} a4_context={'obeys' if ctx else 'violates'} "
        f"a4_compat={'obeys' if cmp_ else 'violates'} m=2"
    )


def _rep_census(jobs, budget_seconds):
    o4 = search.search(
        search.SearchProblem(
            k=4,
            families=("context'", "compat'"),
            find_all=True,
            jobs=jobs,
            budget_seconds=budget_seconds,
        )
    )
    a4_class = search.encode(search.canonicalize(builtin("A4"), free=True))
    classes = {search.encode(c) for c in o4.classes}
    ok = o4.status == "found" and classes == {a4_class}
    return ok, (
        f"k4_status={o4.status} classes={len(o4.classes)} "
        f"unique_a4={'yes' if classes == {a4_class} else 'no'} nodes={o4.nodes}"
    )


def _rep_theorem3(jobs, budget_seconds):
    rep = inequality.three_contradiction_square_lemma()
    o4 = search.search(
        search.SearchProblem(
            k=4,
            families=("context'", "compat'"),
            restriction="three-contradictions",
            jobs=jobs,
            budget_seconds=budget_seconds,
        )
    )
    ok = rep.holds and o4.status == "exhausted"
    return ok, (
        f"lemma={'true' if rep.holds else 'false'} "
        f"k4_restricted={o4.status} nodes={o4.nodes}"
    )


def _rep_bracket():
    a4 = builtin("A4")
    viol = not checker.check_all(a4).obeys
    ten = build_ten_state()
    obeys = checker.check_all(ten).obeys
    ok = viol and obeys and ten.k == 10
    return ok, (
        f"a4_all={'violates' if viol else 'obeys'} "
        f"a10_all={'obeys' if obeys else 'violates'} "
        f"m_all_low=2 m_all_high={math.log2(10):.3f}"
    )


def _rep_pure_count():
    pm = build_pm_square()
    code = {p.label: p.code for p in pm.observables}
    start = oracle.make_state([(code["A"], +1), (code["B"], +1)])
    n = oracle.reachable_pure_count(start, pm)
    return n == 24, f"reachable_pure={n}"


def _rep_properties():
    import random

    rng = random.Random(99)
    pm = build_pm_square()
    for code in range(512):
        row = tuple(1 - 2 * ((code >> j) & 1) for j in range(9))
        if search.contradiction_count(row) % 2 != 1:
            return False, f"even contradiction count on row {code}"
    def agrees(a, fam):
        fix = checker.check(a, fam)
        bf = checker.bounded_bruteforce(a, fam, 6)
        if fix.obeys:
            return bf.obeys
        if len(fix.counterexample.record.inputs) <= 6:
            return not bf.obeys
        return bf.obeys  # minimal witness is out of bruteforce range

    for a in (builtin("A3"), builtin("A4"), build_ten_state()):
        for fam in ("rc", "context'", "compat'"):
            if not agrees(a, fam):
                return False, f"fixpoint/bruteforce disagree on {fam}"
    for _ in range(50):
        k = rng.randint(1, 3)
        values = tuple(
            tuple(rng.choice((1, -1)) for _ in range(9)) for _ in range(k)
        )
        nxt = tuple(
            tuple(rng.randint(1, k) for _ in range(9)) for _ in range(k)
        )
        a = Automaton(pm, k, values, nxt, 1)
        for fam in ("rc", "context'"):
            if not agrees(a, fam):
                return False, "fixpoint/bruteforce disagree on random machine"
        if parse(serialize(a)) != a:
            return False, "serialization round trip failed"
    return True, "rule2_rows=512 fixpoint_samples=53 roundtrip=ok"


def _cmd_reproduce(args) -> int:
    budget = args.budget_seconds
    steps = [
        ("parities", _rep_parities),
        ("oracle-equivalence", _rep_oracle_equivalence),
        ("bounds", _rep_bounds),
        ("a3-behavior", _rep_a3),
        ("theorem1", lambda: _rep_theorem1(args.jobs)),
        ("theorem2", lambda: _rep_theorem2(args.jobs, budget)),
        ("census", lambda: _rep_census(args.jobs, budget)),
        ("theorem3", lambda: _rep_theorem3(args.jobs, budget)),
        ("memory-bracket", _rep_bracket),
        ("pure-states", _rep_pure_count),
        ("properties", _rep_properties),
    ]
    overall = True
    for name, fn in steps:
        if name in args.skip:
            print(f"check={name} status=SKIP")
            continue
        t0 = time.time()
        ok, fields = fn()
        overall = overall and ok
        line = f"check={name} status={'PASS' if ok else 'FAIL'} {fields}"
        if args.output == "human":
            line += f" seconds={time.time() - t0:.2f}"
        print(line, flush=True)
    print(
        f"overall={'PASS' if overall else 'FAIL'} "
        f"m_context={math.log2(3):.3f} m_context_compat=2 "
        f"m_all_low=2 m_all_high={math.log2(10):.3f}"
    )
    return 0 if overall else 1


# --- dispatcher ----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="cmlab",
        description="decide and search finite-state models of sequential "
        "Pauli measurements on the 3x3 magic square",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument(
            "--output",
            choices=("records", "human"),
            default="records",
            help="records prints one key=value line per result",
        )

    p = sub.add_parser("verify", help="check an automaton against a family")
    p.add_argument("automaton", help="file path or builtin:A3|A4|A10")
    p.add_argument("--family", required=True)
    p.add_argument("--all-initial-states", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("search", help="search for machines by state count")
    p.add_argument("--structure", default="pm")
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--families", required=True, help="comma-separated list")
    p.add_argument("--restrict", choices=search.RESTRICTIONS, default=None)
    p.add_argument("--find-all", action="store_true")
    p.add_argument("--jobs", type=int, default=0)
    p.add_argument("--budget-nodes", type=int, default=0)
    p.add_argument("--budget-seconds", type=float, default=0.0)
    common(p)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("chi", help="inequality value of a machine")
    p.add_argument("automaton")
    p.add_argument("--initial", type=int, default=None)
    p.add_argument("--all-orders", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_chi)

    p = sub.add_parser("bound", help="brute-force noncontextual bound")
    p.add_argument("--structure", choices=("pm", "extended15"), required=True)
    common(p)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("squares", help="embedded-square lemma")
    p.add_argument("--lemma", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_squares)

    p = sub.add_parser("build10", help="construct the 10-state machine")
    p.add_argument("--details", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_build10)

    p = sub.add_parser("oracle", help="query the measurement oracle")
    p.add_argument("what", choices=("trace",))
    p.add_argument("structure")
    p.add_argument("trace", help="comma-separated <label><sign> items")
    common(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("reproduce", help="run the full result chain")
    p.add_argument(
        "--skip", action="append", default=[], help="check name to skip"
    )
    p.add_argument("--jobs", type=int, default=0)
    p.add_argument(
        "--budget-seconds",
        type=float,
        default=0.0,
        help="per-search wall budget; an exceeded budget reports Unfinished",
    )
    common(p)
    p.set_defaults(func=_cmd_reproduce)

    return top


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
