"""Members, finite union-closed set systems, witnesses and breadth.

A member is a finite or cofinite subset of the naturals.  Every family
computation goes through a finite encoding: positions ``0..N-1`` cover all
supports and one extra sentinel bit ``N`` stands for the common tail
``{N, N+1, ...}``, on which every member is constant.  Unions,
intersections and differences commute with this encoding, so private
points, compressibility and breadth are computed exactly on ints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Sequence

from .bits import bits_of, full, lowest, mask_of, points_of


class BudgetExceeded(RuntimeError):
    """A search ran out of nodes before reaching an answer."""

    def __init__(self, used: int):
        super().__init__(f"search budget exhausted after {used} nodes")
        self.used = used


class WindowExhausted(ValueError):
    """A witness exists but some private point lies outside the window."""


class Budget:
    """Node counter shared by nested searches."""

    def __init__(self, limit: int | None = None):
        self.limit = limit
        self.used = 0

    def spend(self, n: int = 1) -> None:
        self.used += n
        if self.limit is not None and self.used > self.limit:
            raise BudgetExceeded(self.used)


def as_budget(budget: "Budget | int | None") -> Budget:
    if isinstance(budget, Budget):
        return budget
    return Budget(budget)


@dataclass(frozen=True)
class GroundWindow:
    size: int
    unbounded: bool = False

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("ground window needs size >= 1")

    @property
    def mask(self) -> int:
        return full(self.size)

    def to_json(self) -> dict:
        return {"size": self.size, "unbounded": self.unbounded}

    @classmethod
    def from_json(cls, obj: dict) -> "GroundWindow":
        return cls(int(obj["size"]), bool(obj.get("unbounded", False)))


@dataclass(frozen=True)
class Member:
    """A finite set, or the complement of a finite set.

    ``bits`` holds the elements of a finite member and the excluded points
    of a cofinite one.  Equality is structural, so two members are equal
    exactly when they are the same subset of the naturals.
    """

    cofinite: bool
    bits: int

    @classmethod
    def finite(cls, points: Iterable[int] = ()) -> "Member":
        return cls(False, mask_of(points))

    @classmethod
    def cofinite_excluding(cls, points: Iterable[int] = ()) -> "Member":
        return cls(True, mask_of(points))

    @property
    def kind(self) -> str:
        return "cofinite" if self.cofinite else "finite"

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(bits_of(self.bits))

    def __contains__(self, p: int) -> bool:
        return bool(self.bits >> p & 1) != self.cofinite

    def __or__(self, other: "Member") -> "Member":
        if not self.cofinite and not other.cofinite:
            return Member(False, self.bits | other.bits)
        if self.cofinite and other.cofinite:
            return Member(True, self.bits & other.bits)
        fin, cof = (self, other) if other.cofinite else (other, self)
        return Member(True, cof.bits & ~fin.bits)

    def __and__(self, other: "Member") -> "Member":
        if not self.cofinite and not other.cofinite:
            return Member(False, self.bits & other.bits)
        if self.cofinite and other.cofinite:
            return Member(True, self.bits | other.bits)
        fin, cof = (self, other) if other.cofinite else (other, self)
        return Member(False, fin.bits & ~cof.bits)

    def __invert__(self) -> "Member":
        return Member(not self.cofinite, self.bits)

    def __sub__(self, other: "Member") -> "Member":
        return self & ~other

    def complement_within(self, size: int) -> "Member":
        if self.cofinite:
            raise ValueError("complement within a window needs a finite member")
        return Member(False, full(size) & ~self.bits)

    def issubset(self, other: "Member") -> bool:
        if not self.cofinite:
            if not other.cofinite:
                return self.bits & ~other.bits == 0
            return self.bits & other.bits == 0
        if not other.cofinite:
            return False
        return other.bits & ~self.bits == 0

    def is_empty(self) -> bool:
        return not self.cofinite and self.bits == 0

    def trace(self, mask: int) -> int:
        """Intersection with the finite set `mask`, as a mask."""
        return mask & ~self.bits if self.cofinite else mask & self.bits

    def sort_key(self) -> tuple:
        return (self.cofinite, self.bits.bit_count(), self.bits)

    def __repr__(self) -> str:
        pts = "{" + ",".join(map(str, self.support)) + "}"
        return f"cofinite-excluding{pts}" if self.cofinite else pts

    def to_json(self) -> dict:
        return {"kind": self.kind, "support": list(self.support)}

    @classmethod
    def from_json(cls, obj: Any) -> "Member":
        if isinstance(obj, list):
            return cls.finite(obj)
        kind = obj.get("kind", "finite")
        if kind not in ("finite", "cofinite"):
            raise ValueError(f"unknown member kind {kind!r}")
        support = obj.get("support", [])
        if len(set(support)) != len(support):
            raise ValueError("member support has duplicates")
        return cls(kind == "cofinite", mask_of(support))


def member_op(op: str, x: Member, y: Member | None = None,
              ground: GroundWindow | None = None,
              within_window: bool = False) -> Member:
    """Set algebra on members; `ground`, when given, is validated."""
    if ground is not None:
        for m in (x, y):
            if m is not None:
                _check_in_ground(m, ground)
    if op == "complement":
        if within_window:
            if ground is None:
                raise ValueError("complement within a window needs a ground")
            return x.complement_within(ground.size)
        if ground is not None and not ground.unbounded:
            raise ValueError("complement on a bounded ground needs within_window")
        return ~x
    if y is None:
        raise ValueError(f"{op} needs two operands")
    if op == "union":
        return x | y
    if op == "intersect":
        return x & y
    if op == "difference":
        return x - y
    raise ValueError(f"unknown member operation {op!r}")


def _check_in_ground(m: Member, ground: GroundWindow) -> None:
    if m.bits >> ground.size:
        raise ValueError(f"member {m!r} references positions outside the window")
    if m.cofinite and not ground.unbounded:
        raise ValueError("cofinite member on a bounded ground")


# ---------------------------------------------------------------------------
# finite encoding


def encode(members: Sequence[Member]) -> tuple[list[int], int]:
    """Encode members as masks over ``0..N`` with sentinel bit ``N``."""
    n = 0
    for m in members:
        n = max(n, m.bits.bit_length())
    everything = full(n + 1)
    masks = [everything & ~m.bits if m.cofinite else m.bits for m in members]
    return masks, n


def private_masks(masks: Sequence[int]) -> list[int]:
    """For each mask, the points it owns that no other mask contains."""
    k = len(masks)
    prefix = [0] * (k + 1)
    for i, m in enumerate(masks):
        prefix[i + 1] = prefix[i] | m
    suffix = 0
    out = [0] * k
    for i in range(k - 1, -1, -1):
        out[i] = masks[i] & ~(prefix[i] | suffix)
        suffix |= masks[i]
    return out


def join(family: Sequence[Member]) -> Member:
    if not family:
        raise ValueError("join of an empty family")
    out = family[0]
    for m in family[1:]:
        out = out | m
    return out


def is_compressible(family: Sequence[Member]) -> bool:
    """True iff some member lies inside the union of the others."""
    if not family:
        raise ValueError("empty family")
    masks, _ = encode(family)
    return not all(private_masks(masks))


def dominated_index(family: Sequence[Member]) -> int | None:
    """Index of the first member covered by the others, if any."""
    masks, _ = encode(family)
    for j, p in enumerate(private_masks(masks)):
        if not p:
            return j
    return None


def find_witness(family: Sequence[Member],
                 window: GroundWindow | None = None) -> tuple[int, ...] | None:
    """Smallest private point of each member, or None if compressible.

    Raises WindowExhausted when the family is incompressible but a private
    point cannot be chosen inside `window`.
    """
    if not family:
        raise ValueError("empty family")
    masks, n = encode(family)
    privs = private_masks(masks)
    if not all(privs):
        return None
    pts = tuple(lowest(p) for p in privs)
    # sentinel bit n means "any point >= n"; n itself is such a point
    if window is not None and any(p >= window.size for p in pts):
        raise WindowExhausted(
            f"private points {pts} do not fit in a window of size {window.size}")
    return pts


def verify_witness(family: Sequence[Member], points: Sequence[int]) -> bool:
    if len(family) != len(points) or len(set(points)) != len(points):
        return False
    for j, p in enumerate(points):
        if p not in family[j]:
            return False
        if any(p in x for i, x in enumerate(family) if i != j):
            return False
    return True


def semilattice_leq(a: Member, b: Member) -> bool:
    """The semilattice order: ``a`` below ``b`` iff ``a`` contains ``b``."""
    return b.issubset(a)


def divides(b: Member, a: Member) -> bool:
    """``b`` divides ``a`` iff ``b | a == a``, i.e. ``b`` is a subset of ``a``."""
    return b.issubset(a)


# ---------------------------------------------------------------------------
# set systems


@dataclass(frozen=True)
class SetSystem:
    """An explicit finite family of members, deduplicated on construction."""

    ground: GroundWindow
    members: tuple[Member, ...]
    closed: bool = field(default=False)

    @classmethod
    def build(cls, ground: GroundWindow, members: Iterable[Member],
              closed: bool | None = None) -> "SetSystem":
        seen: dict[Member, None] = {}
        for m in members:
            _check_in_ground(m, ground)
            seen.setdefault(m, None)
        mem = tuple(seen)
        actual = _is_union_closed(mem)
        if closed and not actual:
            raise ValueError("system flagged closed is not union-closed")
        return cls(ground, mem, actual if closed is None else bool(closed))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Member]:
        return iter(self.members)

    def __contains__(self, m: Member) -> bool:
        return m in set(self.members)

    def index(self, m: Member) -> int:
        return self.members.index(m)

    def is_union_closed(self) -> bool:
        return _is_union_closed(self.members)

    def closure(self) -> "SetSystem":
        return SetSystem.build(self.ground, union_closure(self.members), closed=True)

    def to_json(self) -> dict:
        return {"ground": self.ground.to_json(),
                "members": [m.to_json() for m in self.members],
                "closed": self.closed}

    @classmethod
    def from_json(cls, obj: dict) -> "SetSystem":
        ground = GroundWindow.from_json(obj["ground"])
        members = [Member.from_json(m) for m in obj["members"]]
        return cls.build(ground, members, closed=obj.get("closed"))


def _is_union_closed(members: Sequence[Member]) -> bool:
    present = set(members)
    return all((a | b) in present for i, a in enumerate(members) for b in members[i + 1:])


def union_closure(members: Iterable[Member]) -> list[Member]:
    """All nonempty finite unions, in order of first appearance."""
    out: list[Member] = []
    seen: set[Member] = set()
    for m in members:
        if m in seen:
            continue
        new = [m]
        seen.add(m)
        for x in out:
            u = x | m
            if u not in seen:
                seen.add(u)
                new.append(u)
        # unions with the freshly added ones are covered by associativity
        out.extend(new)
    return out


# ---------------------------------------------------------------------------
# incompressible family search


def incompressible_families(masks: Sequence[int], size: int,
                            budget: Budget | None = None,
                            order: Sequence[int] | None = None) -> Iterator[tuple[int, ...]]:
    """Index tuples of incompressible families of exactly `size` masks.

    Families come out in lexicographic order of positions in `order`
    (default: input order).  Compressible partial families prune all of
    their extensions, since adding a member never creates a private point.
    """
    budget = budget or Budget()
    order = list(range(len(masks))) if order is None else list(order)
    n = len(order)

    def rec(start, chosen, privs, union):
        if len(chosen) == size:
            yield tuple(chosen)
            return
        need = size - len(chosen)
        for pos in range(start, n - need + 1):
            budget.spend()
            i = order[pos]
            c = masks[i]
            p = c & ~union
            if not p:
                continue
            new = [q & ~c for q in privs]
            if not all(new):
                continue
            chosen.append(i)
            yield from rec(pos + 1, chosen, new + [p], union | c)
            chosen.pop()

    if size <= 0:
        return
    yield from rec(0, [], [], 0)


@dataclass
class SearchResult:
    family: tuple | None
    witness: tuple[int, ...] | None = None
    indices: tuple[int, ...] | None = None
    exhaustive: bool = False
    nodes: int = 0
    budget_exhausted: bool = False

    @property
    def found(self) -> bool:
        return self.family is not None


def _search_order(masks: Sequence[int]) -> list[int]:
    return sorted(range(len(masks)), key=lambda i: (masks[i].bit_count(), i))


def breadth_exact(system: SetSystem, budget: "Budget | int | None" = None) -> int:
    """Largest size of an incompressible subfamily, by pruned search."""
    found = max_incompressible(system, budget)
    return len(found)


def max_incompressible(system: SetSystem,
                       budget: "Budget | int | None" = None) -> tuple[Member, ...]:
    budget = as_budget(budget)
    masks, _ = encode(system.members)
    order = _search_order(masks)
    union_all = 0
    for m in masks:
        union_all |= m
    # private sets are disjoint and nonempty
    upper = min(len(masks), union_all.bit_count())
    best: list[int] = []
    n = len(order)

    class _Done(Exception):
        pass

    def rec(start, chosen, privs, union):
        nonlocal best
        if len(chosen) > len(best):
            best = list(chosen)
            if len(best) >= upper:
                raise _Done
        for pos in range(start, n):
            if len(chosen) + (n - pos) <= len(best):
                return
            budget.spend()
            i = order[pos]
            c = masks[i]
            p = c & ~union
            if not p:
                continue
            new = [q & ~c for q in privs]
            if not all(new):
                continue
            chosen.append(i)
            rec(pos + 1, chosen, new + [p], union | c)
            chosen.pop()

    try:
        rec(0, [], [], 0)
    except _Done:
        pass
    return tuple(system.members[i] for i in sorted(best))


def breadth_at_least(system, k: int, budget: "Budget | int | None" = None,
                     window: int | None = None, count: int | None = None) -> SearchResult:
    """Look for an incompressible family of exactly `k` members.

    Explicit systems are searched completely, so a miss is flagged
    exhaustive.  Oracle systems are searched over the traces of their first
    `count` members on positions ``0..window-1``; a miss there proves
    nothing.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    budget = as_budget(budget)
    start = budget.used
    if isinstance(system, SetSystem):
        masks, _ = encode(system.members)
        handles: Sequence = system.members
        explicit = True
    else:
        pool = system.pool(window, count)
        masks = [t for t, _ in pool]
        handles = [h for _, h in pool]
        explicit = False
    try:
        for idx in incompressible_families(masks, k, budget, _search_order(masks)):
            idx = tuple(sorted(idx))
            fam = tuple(handles[i] for i in idx)
            wit = (find_witness(fam) if explicit
                   else _oracle_witness(system, fam, [masks[i] for i in idx]))
            return SearchResult(fam, wit, idx, False, budget.used - start)
    except BudgetExceeded:
        return SearchResult(None, None, None, False, budget.used - start, True)
    return SearchResult(None, None, None, explicit, budget.used - start)


def _oracle_witness(system, handles, traces) -> tuple[int, ...]:
    described = [system.describe(h) for h in handles]
    if all(d is not None for d in described):
        wit = find_witness(described)
    else:
        wit = tuple(lowest(p) for p in private_masks(traces))
    if wit is None:
        raise AssertionError("trace-incompressible family compressible in full")
    return wit


def restrict(system, mode: str, arg: Member):
    """The four operators: minus, above, subtract, trace."""
    if not isinstance(system, SetSystem):
        return system.restricted(mode, arg)
    if mode == "minus":
        out = [x for x in system.members if (x & arg).is_empty()]
    elif mode == "above":
        out = [x for x in system.members if arg.issubset(x)]
    elif mode == "subtract":
        out = [x - arg for x in system.members]
    elif mode == "trace":
        out = [x & arg for x in system.members]
    else:
        raise ValueError(f"unknown restriction mode {mode!r}")
    return SetSystem.build(system.ground, out)


def thickness_probe(system, a: Member, k: int, budget=None,
                    window: int | None = None, count: int | None = None) -> SearchResult:
    """Breadth probe of ``S`` traced on ``a``: found means thick at level k."""
    return breadth_at_least(restrict(system, "trace", a), k, budget, window, count)


def family_points(family: Sequence[Member]) -> list[list[int]]:
    return [points_of(m.bits) for m in family]
