"""Finite-state Mealy machines answering two-qubit Pauli measurements.

A machine over a structure with n observables has k states, a k x n value
table (the output, +1 or -1) and a k x n update table (the successor state).
On a measurement the machine first emits the output, then moves.  State ids
are 1-based as in conventional presentations; observables are addressed by
their 0-based id in the structure.  "No change" is stored as an explicit
self-loop, never as a sentinel.

Includes the two reference machines A3 and A4, a 10-state machine derived
from stabilizer eigenstates, and a line-oriented text format.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import oracle
from .observables import Structure, build_pm_square, structure_by_name

__all__ = [
    "Automaton",
    "RunRecord",
    "FormatError",
    "step",
    "run",
    "builtin",
    "build_ten_state",
    "build_ten_state_details",
    "serialize",
    "parse",
]


@dataclass(frozen=True)
class Automaton:
    structure: Structure
    k: int
    values: tuple[tuple[int, ...], ...]  # [state-1][obs] -> +1 | -1
    next: tuple[tuple[int, ...], ...]  # [state-1][obs] -> state id
    initial: int = 1

    def __post_init__(self) -> None:
        n = self.structure.n
        if self.k < 1:
            raise ValueError("state count must be >= 1")
        if len(self.values) != self.k or len(self.next) != self.k:
            raise ValueError("table height must equal the state count")
        for i in range(self.k):
            if len(self.values[i]) != n or len(self.next[i]) != n:
                raise ValueError(f"state {i + 1}: table width must equal {n}")
            for j in range(n):
                if self.values[i][j] not in (+1, -1):
                    raise ValueError(f"state {i + 1}, obs {j}: value must be +1 or -1")
                if not 1 <= self.next[i][j] <= self.k:
                    raise ValueError(
                        f"state {i + 1}, obs {j}: next state {self.next[i][j]} "
                        f"out of range 1..{self.k}"
                    )
        if not 1 <= self.initial <= self.k:
            raise ValueError(f"initial state {self.initial} out of range 1..{self.k}")


@dataclass(frozen=True)
class RunRecord:
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    states: tuple[int, ...]  # length len(inputs) + 1, states[0] is the start


def _obs_id(a: Automaton, obs) -> int:
    if isinstance(obs, str):
        try:
            return a.structure.index[obs]
        except KeyError:
            raise ValueError(f"unknown observable {obs!r}") from None
    j = int(obs)
    if not 0 <= j < a.structure.n:
        raise ValueError(f"observable id {j} out of range 0..{a.structure.n - 1}")
    return j


def step(a: Automaton, state: int, obs) -> tuple[int, int]:
    """Output first, then update: returns (outcome, next state id)."""
    if not 1 <= state <= a.k:
        raise ValueError(f"state {state} out of range 1..{a.k}")
    j = _obs_id(a, obs)
    return a.values[state - 1][j], a.next[state - 1][j]


def run(a: Automaton, start: int, seq: Sequence) -> RunRecord:
    inputs, outputs, states = [], [], [start if 1 <= start <= a.k else start]
    s = start
    for obs in seq:
        v, s2 = step(a, s, obs)
        inputs.append(_obs_id(a, obs))
        outputs.append(v)
        states.append(s2)
        s = s2
    return RunRecord(tuple(inputs), tuple(outputs), tuple(states))


def _tables(spec_rows):
    """spec_rows: per state, list of (sign, next-or-0) with 0 meaning stay."""
    values, nxt = [], []
    for i, row in enumerate(spec_rows, start=1):
        values.append(tuple(v for v, _ in row))
        nxt.append(tuple(i if u == 0 else u for _, u in row))
    return tuple(values), tuple(nxt)


# obs order: A B C a b c alpha beta gamma
_A3_ROWS = (
    [(+1, 0), (+1, 0), (+1, 2), (+1, 0), (+1, 0), (+1, 3), (+1, 0), (+1, 0), (+1, 0)],
    [(+1, 0), (+1, 1), (+1, 0), (-1, 0), (+1, 0), (-1, 0), (-1, 0), (-1, 3), (+1, 0)],
    [(+1, 0), (-1, 0), (-1, 0), (+1, 1), (+1, 0), (+1, 0), (-1, 2), (-1, 0), (+1, 0)],
)

_A4_ROWS = (
    [(+1, 0), (+1, 0), (+1, 2), (+1, 0), (+1, 0), (+1, 3), (+1, 0), (+1, 0), (+1, 0)],
    [(+1, 0), (+1, 0), (+1, 0), (-1, 0), (+1, 0), (-1, 0), (-1, 4), (+1, 1), (+1, 0)],
    [(+1, 0), (-1, 0), (-1, 0), (+1, 0), (+1, 0), (+1, 0), (+1, 1), (-1, 4), (+1, 0)],
    [(+1, 0), (-1, 0), (-1, 3), (-1, 0), (+1, 0), (-1, 2), (-1, 0), (-1, 0), (+1, 0)],
)


def builtin(name: str) -> Automaton:
    if name == "A3":
        values, nxt = _tables(_A3_ROWS)
    elif name == "A4":
        values, nxt = _tables(_A4_ROWS)
    else:
        raise ValueError(f"unknown builtin automaton {name!r}")
    return Automaton(build_pm_square(), len(values), values, nxt, initial=1)


class ConstructionError(RuntimeError):
    pass


_TEN_STATE_PAIRS = (
    (("A", +1), ("B", +1)),
    (("A", -1), ("B", +1)),
    (("C", +1), ("c", +1)),
    (("C", -1), ("c", +1)),
    (("gamma", +1), ("beta", +1)),
    (("gamma", -1), ("beta", +1)),
    (("alpha", +1), ("a", +1)),
    (("alpha", -1), ("a", +1)),
    (("a", +1), ("b", +1)),
    (("B", +1), ("b", +1)),
)


def build_ten_state_details() -> tuple[Automaton, tuple[str, ...], list[tuple[int, int]]]:
    """10-state machine over the square, plus state names and the list of
    (state, obs) transitions where the preferred +1 branch left the state set
    and the -1 branch was taken instead."""
    s = build_pm_square()
    code = {p.label: p.code for p in s.observables}
    states = []
    names = []
    for (l1, v1), (l2, v2) in _TEN_STATE_PAIRS:
        states.append(oracle.make_state([(code[l1], v1), (code[l2], v2)]))
        names.append(f"|{l1}{'+' if v1 > 0 else '-'}{l2}{'+' if v2 > 0 else '-'}>")
    if len(set(states)) != len(states):
        raise ConstructionError("state list contains duplicates")
    ids = {st: i + 1 for i, st in enumerate(states)}
    values, nxt, overrides = [], [], []
    for i, st in enumerate(states, start=1):
        vrow, urow = [], []
        for j, p in enumerate(s.observables):
            pr = oracle.predict(st, p)
            if pr.deterministic:
                v = pr.outcome
                succ = oracle.collapse(st, p, v)
            else:
                plus = oracle.collapse(st, p, +1)
                minus = oracle.collapse(st, p, -1)
                if plus in ids:
                    v, succ = +1, plus
                elif minus in ids:
                    v, succ = -1, minus
                    overrides.append((i, j))
                else:
                    raise ConstructionError(
                        f"construction-escapes-state-set at state {i}, obs {p.label}"
                    )
            if succ not in ids:
                raise ConstructionError(
                    f"construction-escapes-state-set at state {i}, obs {p.label}"
                )
            vrow.append(v)
            urow.append(ids[succ])
        values.append(tuple(vrow))
        nxt.append(tuple(urow))
    a = Automaton(s, 10, tuple(values), tuple(nxt), initial=1)
    return a, tuple(names), overrides


def build_ten_state() -> Automaton:
    return build_ten_state_details()[0]


# --- text format v1 ----------------------------------------------------------

_MAGIC = "pm-automaton v1"


class FormatError(ValueError):
    pass


def serialize(a: Automaton) -> str:
    lines = [
        _MAGIC,
        f"structure: {a.structure.name}",
        f"states: {a.k}",
        f"initial: {a.initial}",
    ]
    labels = a.structure.labels()
    for i in range(a.k):
        lines.append(f"state {i + 1}:")
        for j, label in enumerate(labels):
            sign = "+" if a.values[i][j] > 0 else "-"
            lines.append(f"{label} {sign} {a.next[i][j]}")
    return "\n".join(lines) + "\n"


def parse(text: str) -> Automaton:
    items = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            items.append((lineno, line))
    pos = 0

    def take(what: str) -> tuple[int, str]:
        nonlocal pos
        if pos >= len(items):
            raise FormatError(f"line {items[-1][0] if items else 0}: missing {what}")
        item = items[pos]
        pos += 1
        return item

    def field(key: str) -> str:
        lineno, line = take(f"'{key}:' line")
        if not line.startswith(key + ":"):
            raise FormatError(f"line {lineno}: expected '{key}: ...', got {line!r}")
        return line[len(key) + 1 :].strip()

    lineno, line = take("header")
    if line != _MAGIC:
        raise FormatError(f"line {lineno}: expected header {_MAGIC!r}")
    structure = structure_by_name(field("structure"))
    try:
        k = int(field("states"))
        initial = int(field("initial"))
    except ValueError as exc:
        raise FormatError(f"line {items[pos - 1][0]}: {exc}") from None

    labels = structure.labels()
    values, nxt = [], []
    for i in range(1, k + 1):
        lineno, line = take(f"'state {i}:' line")
        if line != f"state {i}:":
            raise FormatError(f"line {lineno}: expected 'state {i}:', got {line!r}")
        vrow, urow = [], []
        for label in labels:
            lineno, line = take(f"entry for {label}")
            parts = line.split()
            if len(parts) != 3 or parts[0] != label or parts[1] not in "+-":
                raise FormatError(
                    f"line {lineno}: expected '{label} <+|-> <next-id>', got {line!r}"
                )
            try:
                target = int(parts[2])
            except ValueError:
                raise FormatError(f"line {lineno}: bad state id {parts[2]!r}") from None
            vrow.append(+1 if parts[1] == "+" else -1)
            urow.append(target)
        values.append(tuple(vrow))
        nxt.append(tuple(urow))
    if pos != len(items):
        raise FormatError(f"line {items[pos][0]}: trailing content")
    try:
        return Automaton(structure, k, tuple(values), tuple(nxt), initial)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
