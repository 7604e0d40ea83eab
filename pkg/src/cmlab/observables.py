"""Exact two-qubit Pauli algebra and the measurement structures built on it.

A two-qubit Pauli operator is encoded by two 2-bit vectors (x, z), bit q
addressing qubit q, via op(x, z) = prod_q i^(x_q z_q) X^x_q Z^z_q.  With this
convention op(1, 1) = Y on a single qubit and the phase of any product is an
integer power of i, computed with integer arithmetic only.  A structure is a
fixed set of such observables together with its commutation ("compatibility")
relation and its parity-labeled contexts: the 3x3 square of two-qubit Paulis
and its 15-observable extension.

Observables inside a structure are addressed by dense integer ids (their
position in ``structure.observables``); labels exist for I/O only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

__all__ = [
    "Pauli",
    "Context",
    "Structure",
    "PHASES",
    "pauli_product",
    "phase_exponent_code",
    "product_code",
    "commutes_code",
    "build_pm_square",
    "build_extended_square",
    "structure_by_name",
    "EmbeddedSquare",
    "embedded_pm_squares",
]

# Exact unit constants indexed by the power of i; never produced by float math.
PHASES = (1, 1j, -1, -1j)


def _bits(v: int) -> tuple[int, int]:
    return v & 1, (v >> 1) & 1


def phase_exponent_code(c1: int, c2: int) -> int:
    """Power of i in op(c1) * op(c2) = i^e * op(c1 ^ c2), codes x | z << 2."""
    e = 0
    for q in (0, 1):
        x1, z1 = (c1 >> q) & 1, (c1 >> (q + 2)) & 1
        x2, z2 = (c2 >> q) & 1, (c2 >> (q + 2)) & 1
        x3, z3 = x1 ^ x2, z1 ^ z2
        e += x1 * z1 + x2 * z2 + 2 * z1 * x2 - x3 * z3
    return e % 4


def product_code(c1: int, c2: int) -> int:
    return c1 ^ c2


def commutes_code(c1: int, c2: int) -> bool:
    """Symplectic inner product x1.z2 + z1.x2 = 0 (mod 2)."""
    x1, z1 = c1 & 3, (c1 >> 2) & 3
    x2, z2 = c2 & 3, (c2 >> 2) & 3
    return (bin(x1 & z2).count("1") + bin(z1 & x2).count("1")) % 2 == 0


@dataclass(frozen=True)
class Pauli:
    """A two-qubit Pauli operator with positive sign.

    Attributes:
        x: X-part bit vector, bit q = qubit q.
        z: Z-part bit vector.
        label: display name; ignored in comparisons.
    """

    x: int
    z: int
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not (0 <= self.x <= 3 and 0 <= self.z <= 3):
            raise ValueError(f"bit vectors out of range: x={self.x} z={self.z}")

    @property
    def code(self) -> int:
        return self.x | (self.z << 2)

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def commutes(self, other: "Pauli") -> bool:
        return commutes_code(self.code, other.code)


def pauli_product(p: Pauli, q: Pauli) -> tuple[Pauli, complex]:
    """Multiply two Paulis exactly.

    Returns:
        (r, phase) with p * q = phase * r, phase one of 1, -1, 1j, -1j.
    """
    e = phase_exponent_code(p.code, q.code)
    c = p.code ^ q.code
    return Pauli(c & 3, (c >> 2) & 3), PHASES[e]


@dataclass(frozen=True)
class Context:
    """Three mutually compatible observables with a required outcome parity."""

    members: tuple[int, int, int]
    parity: int

    def __post_init__(self) -> None:
        if tuple(sorted(self.members)) != self.members:
            raise ValueError("context members must be sorted by id")
        if self.parity not in (+1, -1):
            raise ValueError("parity must be +1 or -1")


class Structure:
    """A named observable set with derived compatibility and contexts.

    Immutable by convention.  ``compat`` is always recomputed from the
    operators, never stored independently.  ``grid`` is the 3x3 id layout for
    the square structure (None for the extension).
    """

    def __init__(
        self,
        name: str,
        observables: tuple[Pauli, ...],
        context_members: tuple[tuple[int, int, int], ...],
        grid: tuple[tuple[int, int, int], ...] | None = None,
    ):
        self.name = name
        self.observables = observables
        self.n = len(observables)
        self.index = {p.label: i for i, p in enumerate(observables)}
        if len(self.index) != self.n:
            raise ValueError("duplicate observable labels")
        for p in observables:
            if p.is_identity:
                raise ValueError("identity is excluded from structures")
        self.compat = tuple(
            tuple(observables[i].commutes(observables[j]) for j in range(self.n))
            for i in range(self.n)
        )
        self.contexts = tuple(
            Context(tuple(sorted(ms)), self._context_parity(ms)) for ms in context_members
        )
        self.grid = grid

    def _context_parity(self, members: tuple[int, int, int]) -> int:
        """Parity from the exact operator product; members must multiply to +-identity."""
        for i, j in itertools.combinations(members, 2):
            if not self.observables[i].commutes(self.observables[j]):
                raise ValueError(f"context {members} is not mutually compatible")
        code, e = 0, 0
        for m in members:
            e = (e + phase_exponent_code(code, self.observables[m].code)) % 4
            code ^= self.observables[m].code
        if code != 0 or e % 2 != 0:
            raise ValueError(f"context {members} does not multiply to +-identity")
        return 1 if e == 0 else -1

    def labels(self) -> tuple[str, ...]:
        return tuple(p.label for p in self.observables)

    def context_of_pair(self, i: int, j: int) -> Context | None:
        for ctx in self.contexts:
            if i in ctx.members and j in ctx.members:
                return ctx
        return None

    def __repr__(self) -> str:
        return f"Structure({self.name!r}, n={self.n}, contexts={len(self.contexts)})"


_SIGMA = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}  # 1, X, Y, Z as (x, z)


def _two_qubit(k: int, l: int, label: str) -> Pauli:
    xk, zk = _SIGMA[k]
    xl, zl = _SIGMA[l]
    return Pauli(xk | (xl << 1), zk | (zl << 1), label)


@lru_cache(maxsize=None)
def build_pm_square() -> Structure:
    """The 3x3 square: rows/columns commute, all products +1 except column Ccgamma."""
    obs = (
        _two_qubit(3, 0, "A"),      # sigma_z x 1
        _two_qubit(0, 3, "B"),      # 1 x sigma_z
        _two_qubit(3, 3, "C"),      # sigma_z x sigma_z
        _two_qubit(0, 1, "a"),      # 1 x sigma_x
        _two_qubit(1, 0, "b"),      # sigma_x x 1
        _two_qubit(1, 1, "c"),      # sigma_x x sigma_x
        _two_qubit(3, 1, "alpha"),  # sigma_z x sigma_x
        _two_qubit(1, 3, "beta"),   # sigma_x x sigma_z
        _two_qubit(2, 2, "gamma"),  # sigma_y x sigma_y
    )
    rows = ((0, 1, 2), (3, 4, 5), (6, 7, 8))
    cols = ((0, 3, 6), (1, 4, 7), (2, 5, 8))
    return Structure("pm", obs, rows + cols, grid=rows)


@lru_cache(maxsize=None)
def build_extended_square() -> Structure:
    """All 15 nontrivial sigma_k x sigma_l with their 15 parity-labeled trios."""
    pairs = [(k, l) for k in range(4) for l in range(4) if (k, l) != (0, 0)]
    obs = tuple(_two_qubit(k, l, f"chi{k}{l}") for k, l in pairs)
    idx = {(k, l): i for i, (k, l) in enumerate(pairs)}
    contexts = []
    for k in (1, 2, 3):
        for l in (1, 2, 3):
            contexts.append((idx[k, 0], idx[k, l], idx[0, l]))
    plus_trios = (((1, 1), (2, 3), (3, 2)), ((1, 2), (2, 1), (3, 3)), ((1, 3), (2, 2), (3, 1)))
    minus_trios = (((1, 1), (2, 2), (3, 3)), ((1, 2), (2, 3), (3, 1)), ((1, 3), (2, 1), (3, 2)))
    for trio in plus_trios + minus_trios:
        contexts.append(tuple(idx[kl] for kl in trio))
    return Structure("extended15", obs, tuple(contexts))


def structure_by_name(name: str) -> Structure:
    if name == "pm":
        return build_pm_square()
    if name == "extended15":
        return build_extended_square()
    raise ValueError(f"unknown structure {name!r} (expected 'pm' or 'extended15')")


@dataclass(frozen=True)
class EmbeddedSquare:
    """A 3x3 arrangement of 9 observables whose rows and columns are contexts."""

    grid: tuple[tuple[int, int, int], ...]
    contexts: tuple[Context, ...]  # 3 rows then 3 columns


def embedded_pm_squares(s: Structure) -> list[EmbeddedSquare]:
    """Enumerate every PM square embedded in ``s``.

    Brute force over unordered triples of pairwise disjoint contexts as rows,
    then over member orders, keeping arrangements whose columns are contexts
    too.  Squares are deduplicated by their context set and reported with the
    lexicographically smallest grid, in sorted order.
    """
    member_sets = {frozenset(c.members): c for c in s.contexts}
    found: dict[frozenset, tuple] = {}
    for c1, c2, c3 in itertools.combinations(s.contexts, 3):
        ids = set(c1.members) | set(c2.members) | set(c3.members)
        if len(ids) != 9:
            continue
        for p1 in itertools.permutations(c1.members):
            for p2 in itertools.permutations(c2.members):
                for p3 in itertools.permutations(c3.members):
                    columns = tuple(frozenset((p1[j], p2[j], p3[j])) for j in range(3))
                    if not all(col in member_sets for col in columns):
                        continue
                    key = frozenset(
                        [frozenset(c1.members), frozenset(c2.members), frozenset(c3.members)]
                        + list(columns)
                    )
                    grid = (p1, p2, p3)
                    if key not in found or grid < found[key][0]:
                        found[key] = (grid, (c1, c2, c3, *(member_sets[col] for col in columns)))
    squares = []
    for grid, ctxs in sorted(found.values()):
        parities = [c.parity for c in ctxs]
        prod = 1
        for p in parities:
            prod *= p
        if prod != -1:
            raise AssertionError(f"embedded square {grid} breaks the parity invariant")
        squares.append(EmbeddedSquare(grid, ctxs))
    return squares
