"""Constructors: free semilattices, spreads, the three level families,
abstract semilattice tables and the Cayley embedding."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterator, Sequence

from .bits import bits_of, full, mask_of, points_of, submasks
from .setsys import GroundWindow, Member, SetSystem

FREE_LIMIT = 16
LEVEL_LIMIT = 16
TYPE_TAGS = ("max", "min", "ort")


class ConsistencyError(RuntimeError):
    """An algebraic identity that must hold did not."""


@dataclass(frozen=True)
class Spread:
    """A finite prefix ``E_1, ..., E_k`` of pairwise disjoint nonempty blocks.

    Blocks are stored as masks; levels are 1-indexed in every method.
    """

    blocks: tuple[int, ...]

    def __post_init__(self):
        seen = 0
        for b in self.blocks:
            if not b:
                raise ValueError("spread blocks must be nonempty")
            if b & seen:
                raise ValueError("spread blocks must be pairwise disjoint")
            seen |= b

    @classmethod
    def of(cls, blocks: Sequence[Sequence[int]]) -> "Spread":
        return cls(tuple(mask_of(b) for b in blocks))

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(b.bit_count() for b in self.blocks)

    @property
    def join(self) -> int:
        out = 0
        for b in self.blocks:
            out |= b
        return out

    def block(self, n: int) -> int:
        return self.blocks[n - 1]

    def before(self, n: int) -> int:
        out = 0
        for b in self.blocks[: n - 1]:
            out |= b
        return out

    def after(self, n: int) -> int:
        out = 0
        for b in self.blocks[n:]:
            out |= b
        return out

    def grows(self) -> bool:
        """Finite shadow of sizes tending to infinity: nondecreasing sizes."""
        s = self.sizes
        return all(a <= b for a, b in zip(s, s[1:]))

    def matches_profile(self, profile: Callable[[int], int]) -> bool:
        return all(sz == profile(n) for n, sz in enumerate(self.sizes, start=1))

    def select(self, indices: Sequence[int]) -> "Spread":
        """Sub-spread on the given 1-indexed levels."""
        return Spread(tuple(self.block(n) for n in indices))

    def block_lists(self) -> list[list[int]]:
        return [points_of(b) for b in self.blocks]

    def to_json(self) -> list[list[int]]:
        return self.block_lists()

    @classmethod
    def from_json(cls, obj) -> "Spread":
        return cls.of(obj)


PROFILES: dict[str, Callable[[int], int]] = {
    "linear": lambda n: n,
    "square": lambda n: n * n,
    "double": lambda n: 2 * n,
}


def resolve_profile(profile) -> Callable[[int], int]:
    if callable(profile):
        return profile
    try:
        return PROFILES[profile]
    except KeyError:
        raise ValueError(f"unknown spread profile {profile!r}") from None


def spread_standard(k: int, profile="linear", offset: int = 0) -> Spread:
    """Blocks of sizes profile(1..k) laid out consecutively from `offset`."""
    if k < 1:
        raise ValueError("a spread needs at least one block")
    f = resolve_profile(profile)
    blocks = []
    pos = offset
    for n in range(1, k + 1):
        size = f(n)
        if size < 1:
            raise ValueError(f"profile gives empty block at level {n}")
        blocks.append(full(size) << pos)
        pos += size
    return Spread(tuple(blocks))


def free_semilattice(n: int) -> SetSystem:
    if not 1 <= n <= FREE_LIMIT:
        raise ValueError(f"free semilattice rank must be in 1..{FREE_LIMIT}")
    members = [Member(False, m) for m in range(1, 1 << n)]
    return SetSystem(GroundWindow(n), tuple(members), True)


def chain_system(n: int) -> SetSystem:
    """Initial segments {0}, {0,1}, ..., {0..n-1}."""
    return SetSystem(GroundWindow(n), tuple(Member(False, full(i)) for i in range(1, n + 1)), True)


# ---------------------------------------------------------------------------
# the three level families


@dataclass(frozen=True)
class LevelPattern:
    type_tag: str
    level: int
    inner: int

    def __post_init__(self):
        if self.type_tag not in TYPE_TAGS:
            raise ValueError(f"unknown type tag {self.type_tag!r}")
        if not self.inner:
            raise ValueError("inner set must be nonempty")


def pattern_mask(type_tag: str, spread: Spread, n: int, inner: int) -> int:
    """The level-n member with inner set `inner`, traced on join(spread)."""
    if inner & ~spread.block(n) or not inner:
        raise ValueError(f"inner set is not a nonempty subset of block {n}")
    if type_tag == "max":
        return spread.before(n) | inner
    if type_tag == "min":
        return inner | spread.after(n)
    if type_tag == "ort":
        return spread.before(n) | inner | spread.after(n)
    raise ValueError(f"unknown type tag {type_tag!r}")


def pattern_member(type_tag: str, spread: Spread, n: int, inner: int,
                   unbounded: bool = False) -> Member:
    """As `pattern_mask`, but as a member.

    In unbounded mode the min and ort members also contain everything
    outside join(spread), standing in for the blocks beyond the prefix.
    """
    m = pattern_mask(type_tag, spread, n, inner)
    if unbounded and type_tag in ("min", "ort"):
        return Member(True, spread.join & ~m)
    return Member(False, m)


def level_patterns(type_tag: str, spread: Spread, unbounded: bool = False
                   ) -> Iterator[tuple[LevelPattern, Member]]:
    for n in range(1, len(spread) + 1):
        if spread.block(n).bit_count() > LEVEL_LIMIT:
            raise ValueError(f"block {n} too large to enumerate its levels")
        for a in submasks(spread.block(n)):
            yield LevelPattern(type_tag, n, a), pattern_member(type_tag, spread, n, a, unbounded)


def canonical_family(type_tag: str, spread: Spread, unbounded: bool = False) -> SetSystem:
    members = [m for _, m in level_patterns(type_tag, spread, unbounded)]
    size = max(spread.join.bit_length(), 1)
    return SetSystem.build(GroundWindow(size, unbounded), members, closed=True)


def expected_count(spread: Spread) -> int:
    return sum((1 << s) - 1 for s in spread.sizes)


def merge_count(type_tag: str, spread: Spread, unbounded: bool = False) -> int:
    """How many level patterns coincide with an earlier one.

    Only ort merges: its full pattern at every level is join(spread).
    """
    return expected_count(spread) - len(canonical_family(type_tag, spread, unbounded))


def level_of(x: Member, spread: Spread, type_tag: str) -> LevelPattern | None:
    """Recover (level, inner) from a member, in either mode; None if no match.

    The shared top member of the ort family is reported at level 1.
    """
    for n in range(1, len(spread) + 1):
        inner = x.trace(spread.block(n))
        if not inner:
            continue
        for unbounded in (False, True):
            if pattern_member(type_tag, spread, n, inner, unbounded) == x:
                return LevelPattern(type_tag, n, inner)
    return None


def refines(fine: Spread, coarse: Spread) -> bool:
    used = set()
    for f in fine.blocks:
        hosts = [i for i, e in enumerate(coarse.blocks) if f & ~e == 0]
        if not hosts or hosts[0] in used:
            return False
        used.add(hosts[0])
    return True


# ---------------------------------------------------------------------------
# abstract semilattices


@dataclass(frozen=True)
class AbstractSemilattice:
    """Multiplication table, checked commutative, associative, idempotent."""

    n: int
    table: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        t = self.table
        if self.n < 1 or len(t) != self.n or any(len(r) != self.n for r in t):
            raise ValueError("table must be n x n with n >= 1")
        rng = range(self.n)
        for x in rng:
            if any(not 0 <= v < self.n for v in t[x]):
                raise ValueError("table entries out of range")
            if t[x][x] != x:
                raise ValueError(f"not idempotent at {x}")
            for y in rng:
                if t[x][y] != t[y][x]:
                    raise ValueError(f"not commutative at ({x}, {y})")
        for x, y, z in product(rng, repeat=3):
            if t[t[x][y]][z] != t[x][t[y][z]]:
                raise ValueError(f"not associative at ({x}, {y}, {z})")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "AbstractSemilattice":
        return cls(len(rows), tuple(tuple(int(v) for v in r) for r in rows))

    def mul(self, x: int, y: int) -> int:
        return self.table[x][y]

    def divides(self, x: int, y: int) -> bool:
        return self.table[x][y] == y


def table_of_system(system: SetSystem) -> AbstractSemilattice:
    """The abstract table of a union-closed system, elements in member order."""
    index = {m: i for i, m in enumerate(system.members)}
    try:
        rows = [[index[a | b] for b in system.members] for a in system.members]
    except KeyError:
        raise ValueError("system is not union-closed") from None
    return AbstractSemilattice.from_rows(rows)


def cayley_embed(sl: AbstractSemilattice) -> SetSystem:
    """Member ``i`` is the set of elements that ``i`` does not divide."""
    members = []
    for x in range(sl.n):
        members.append(Member(False, mask_of(y for y in range(sl.n) if not sl.divides(x, y))))
    if len(set(members)) != sl.n:
        raise ConsistencyError("Cayley map is not injective")
    for x in range(sl.n):
        for y in range(sl.n):
            if members[x] | members[y] != members[sl.mul(x, y)]:
                raise ConsistencyError(f"Cayley map not a homomorphism at ({x}, {y})")
    return SetSystem(GroundWindow(sl.n), tuple(members), True)


def binary_tree_semilattice(depth: int) -> AbstractSemilattice:
    """Full binary tree with `depth` levels below the root under
    youngest-common-ancestor; vertex v (heap numbering from 1) is element v-1."""
    count = (1 << (depth + 1)) - 1

    def yca(a: int, b: int) -> int:
        while a != b:
            if a > b:
                a //= 2
            else:
                b //= 2
        return a

    rows = [[yca(a, b) - 1 for b in range(1, count + 1)] for a in range(1, count + 1)]
    return AbstractSemilattice.from_rows(rows)
