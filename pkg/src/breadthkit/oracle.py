"""Query-presented union-closed systems, possibly infinite.

An oracle enumerates opaque member handles in a fixed order and answers
trace queries ``handle ∩ mask`` for finite masks.  Built-ins whose members
are finite or cofinite use `Member` values as handles.

Position encodings (all fixed, see `tri_pos`, `ex5_pos`, `ex5_prime_pos`):

* standard spreads are laid out consecutively, so the cell ``(n, k)`` of
  the triangular ground ``{(n, k) : 1 <= k <= n}`` sits at
  ``n(n-1)/2 + k - 1``;
* the disjoint union ``Omega_0 ⊔ N`` interleaves: cell ``q`` of Omega_0 goes
  to ``2q`` and the natural ``i >= 1`` to ``2i - 1``;
* the product ``Omega_0 × N`` uses the Cantor pairing of ``(q, i - 1)``.
"""

from __future__ import annotations

from itertools import combinations, count as _count, islice
from math import gcd, isqrt
from typing import Any, Callable, Iterator

from .bits import bits_of, full, mask_of, points_of, submasks
from .canonical import Spread, resolve_profile, spread_standard
from .setsys import GroundWindow, Member, SetSystem, union_closure


class OracleSystem:
    """Base class: subclasses supply `handles`, `trace` and `union`."""

    tag = "ORACLE"

    def handles(self) -> Iterator[Any]:
        raise NotImplementedError

    def trace(self, h, mask: int) -> int:
        raise NotImplementedError

    def union(self, h1, h2):
        raise NotImplementedError

    def describe(self, h) -> Member | None:
        return None

    def params(self) -> dict:
        return {}

    def spec(self) -> dict:
        return {"tag": self.tag, **self.params()}

    def handle_to_json(self, h) -> Any:
        d = self.describe(h)
        if d is None:
            raise TypeError(f"{self.tag} handles are not serializable")
        return d.to_json()

    def handle_from_json(self, obj) -> Any:
        return Member.from_json(obj)

    # search hints, overridden by built-ins
    def search_window(self, depth: int) -> int:
        return 16

    def search_count(self, depth: int) -> int:
        return 512

    @property
    def finite(self) -> bool:
        return False

    def first(self, count: int) -> list:
        return list(islice(self.handles(), count))

    def pool(self, window: int | None = None, count: int | None = None,
             mask: int | None = None, depth: int = 3) -> list[tuple[int, Any]]:
        """Distinct traces of the first `count` handles, first handle kept."""
        if mask is None:
            mask = full(window if window is not None else self.search_window(depth))
        if count is None:
            count = self.search_count(depth)
        seen: dict[int, Any] = {}
        for h in islice(self.handles(), count):
            seen.setdefault(self.trace(h, mask), h)
        return list(seen.items())

    def restricted(self, mode: str, arg: Member) -> "RestrictedOracle":
        return RestrictedOracle(self, mode, arg)


class MemberOracle(OracleSystem):
    """Oracle whose handles are `Member` values."""

    def trace(self, h: Member, mask: int) -> int:
        return h.trace(mask)

    def union(self, h1: Member, h2: Member) -> Member:
        return h1 | h2

    def describe(self, h: Member) -> Member:
        return h


class ExplicitOracle(MemberOracle):
    tag = "EXPLICIT"

    def __init__(self, system: SetSystem):
        if not system.closed:
            raise ValueError("oracle systems must be union-closed")
        self.system = system

    def handles(self):
        return iter(self.system.members)

    def params(self):
        return {"system": self.system.to_json()}

    @property
    def finite(self) -> bool:
        return True

    def search_window(self, depth):
        return self.system.ground.size + 1

    def search_count(self, depth):
        return len(self.system)


def _fin_stream() -> Iterator[int]:
    yield 0
    for top in _count():
        for r in range(top + 1):
            for rest in combinations(range(top), r):
                yield mask_of(rest) | 1 << top


class FinOracle(MemberOracle):
    """FIN: finite sets graded by (max element, size, lexicographic)."""

    tag = "FIN"

    def handles(self):
        return (Member(False, m) for m in _fin_stream())

    def search_window(self, depth):
        return depth * (depth + 1) // 2

    def search_count(self, depth):
        return 1 << self.search_window(depth)


class CofinOracle(MemberOracle):
    """COFIN: complements of the FIN enumeration."""

    tag = "COFIN"

    def handles(self):
        return (Member(True, m) for m in _fin_stream())

    def search_window(self, depth):
        # traces on a finite window are all of its subsets, as for FIN
        return depth * (depth + 1) // 2

    def search_count(self, depth):
        return 1 << self.search_window(depth)


class FinCofinOracle(MemberOracle):
    tag = "FINCOFIN"

    def handles(self):
        for m in _fin_stream():
            yield Member(False, m)
            yield Member(True, m)

    def search_window(self, depth):
        return depth * (depth + 1) // 2

    def search_count(self, depth):
        return 2 << self.search_window(depth)


class ChainOracle(MemberOracle):
    tag = "CHAIN"

    def handles(self):
        return (Member(False, full(n)) for n in _count(1))


class _SpreadOracle(MemberOracle):
    """Shared layout for oracles built over a standard spread covering N."""

    def __init__(self, profile="linear"):
        self.profile_name = profile if isinstance(profile, str) else "custom"
        self.profile = resolve_profile(profile)

    def spread(self, k: int) -> Spread:
        return spread_standard(k, self.profile)

    def params(self):
        return {"profile": self.profile_name}

    def _blocks(self) -> Iterator[tuple[int, int, int]]:
        """(level, block mask, mask of everything before it)."""
        pos = 0
        for n in _count(1):
            size = self.profile(n)
            block = full(size) << pos
            yield n, block, full(pos)
            pos += size

    def _prefix_width(self, k: int) -> int:
        return sum(self.profile(n) for n in range(1, k + 1))


class CanonicalOracle(_SpreadOracle):
    """The unbounded max/min/ort family over the standard spread.

    Since the spread covers the naturals, ``E_{>n}`` is the cofinite set
    excluding ``E_1 ∪ ... ∪ E_n``.
    """

    def __init__(self, type_tag: str, profile="linear"):
        super().__init__(profile)
        if type_tag not in ("max", "min", "ort"):
            raise ValueError(f"unknown type tag {type_tag!r}")
        self.type_tag = type_tag
        self.tag = "T" + type_tag.upper()

    def handles(self):
        for n, block, before in self._blocks():
            for a in submasks(block):
                if self.type_tag == "max":
                    yield Member(False, before | a)
                elif self.type_tag == "min":
                    yield Member(True, before | (block & ~a))
                else:
                    if n > 1 and a == block:
                        continue  # the shared top member
                    yield Member(True, block & ~a)

    def search_window(self, depth):
        return self._prefix_width(depth + 1)

    def search_count(self, depth):
        return min(4096, sum((1 << self.profile(n)) - 1 for n in range(1, depth + 3)))


class BlocksOracle(_SpreadOracle):
    """Finite unions of whole blocks of the standard spread."""

    tag = "BLOCKS"

    def handles(self):
        blocks: list[int] = []
        gen = self._blocks()
        for code in _count():
            while code.bit_length() > len(blocks):
                blocks.append(next(gen)[1])
            m = 0
            for i in bits_of(code):
                m |= blocks[i]
            yield Member(False, m)

    def search_window(self, depth):
        return self._prefix_width(depth * (depth + 1) // 2)

    def search_count(self, depth):
        return 1 << (depth * (depth + 1) // 2)


class PeriodicSet:
    """``{i : i mod period in residues}``, reduced to its least period."""

    __slots__ = ("period", "residues")

    def __init__(self, period: int, residues: int):
        p = period
        for d in range(1, period + 1):
            if period % d == 0 and _repeat(residues & full(d), d, period) == residues:
                p = d
                break
        self.period = p
        self.residues = residues & full(p)

    def __eq__(self, other):
        return isinstance(other, PeriodicSet) and (self.period, self.residues) == (
            other.period, other.residues)

    def __hash__(self):
        return hash((self.period, self.residues))

    def __repr__(self):
        return f"PeriodicSet({self.period}, {points_of(self.residues)})"

    def __or__(self, other: "PeriodicSet") -> "PeriodicSet":
        p = self.period * other.period // gcd(self.period, other.period)
        return PeriodicSet(p, _repeat(self.residues, self.period, p)
                           | _repeat(other.residues, other.period, p))

    def trace(self, mask: int) -> int:
        width = mask.bit_length()
        return mask & _repeat(self.residues, self.period, width)


def _repeat(pattern: int, period: int, width: int) -> int:
    out = 0
    for start in range(0, width, period):
        out |= pattern << start
    return out & full(width)


class PeriodicOracle(OracleSystem):
    """A finite presentation of P(N): its periodic members with period 2^r.

    Enumerated by period, then residue mask.  Closed under unions because
    the union of two such sets has period the larger of the two.
    """

    tag = "POWERSET"

    def handles(self):
        seen = set()
        for r in _count():
            p = 1 << r
            for res in range(1 << p):
                h = PeriodicSet(p, res)
                if h.period == p and h not in seen:
                    seen.add(h)
                    yield h

    def trace(self, h: PeriodicSet, mask: int) -> int:
        return h.trace(mask)

    def union(self, h1, h2):
        return h1 | h2

    def describe(self, h):
        if h.residues == 0:
            return Member(False, 0)
        if h.residues == full(h.period):
            return Member(True, 0)
        return None

    def handle_to_json(self, h):
        return {"period": h.period, "residues": points_of(h.residues)}

    def handle_from_json(self, obj):
        return PeriodicSet(int(obj["period"]), mask_of(obj["residues"]))

    def search_window(self, depth):
        return 64

    def search_count(self, depth):
        return 300


def digit_set(j: int) -> PeriodicSet:
    """Positions whose binary digit j is 1."""
    p = 1 << (j + 1)
    return PeriodicSet(p, full(p) & ~full(p // 2))


# ---------------------------------------------------------------------------
# encodings for the two-representation example


def tri_pos(n: int, k: int) -> int:
    """Position of cell (n, k), 1 <= k <= n."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    return n * (n - 1) // 2 + k - 1


def tri_level(q: int) -> int:
    n = (1 + isqrt(1 + 8 * q)) // 2
    while n * (n - 1) // 2 > q:
        n -= 1
    while (n + 1) * n // 2 <= q:
        n += 1
    return n


def cantor(a: int, b: int) -> int:
    return (a + b) * (a + b + 1) // 2 + b


def uncantor(p: int) -> tuple[int, int]:
    w = (isqrt(8 * p + 1) - 1) // 2
    b = p - w * (w + 1) // 2
    return w - b, b


def ex5_pos(part: str, x: int) -> int:
    """``part`` is "cell" (x a triangular cell) or "nat" (x >= 1)."""
    if part == "cell":
        return 2 * x
    if part == "nat":
        if x < 1:
            raise ValueError("naturals start at 1")
        return 2 * x - 1
    raise ValueError(part)


def ex5_prime_pos(cell: int, i: int) -> int:
    if i < 1:
        raise ValueError("naturals start at 1")
    return cantor(cell, i - 1)


class Ex5Oracle(OracleSystem):
    """Members ``(level, inner, m)`` with ``m >= level >= 2``.

    The first presentation is ``a ⊔ {1..m}`` on Omega_0 ⊔ N, the second
    ``(a × N) ∪ (Omega_0 × {1..m})`` on Omega_0 × N, where ``a`` is the
    unbounded min-family member of that level and inner set.
    """

    def __init__(self, prime: bool = False):
        self.prime = prime
        self.tag = "EX5_SPRIME" if prime else "EX5_S"

    @staticmethod
    def _block(n: int) -> int:
        return full(n) << (n * (n - 1) // 2)

    def handles(self):
        for m in _count(2):
            for n in range(2, m + 1):
                for a in submasks(self._block(n)):
                    yield (n, a, m)

    @staticmethod
    def in_min_member(h, cell: int) -> bool:
        n, a, _ = h
        lv = tri_level(cell)
        return lv > n or (lv == n and bool(a >> cell & 1))

    def contains(self, h, p: int) -> bool:
        if self.prime:
            cell, j = uncantor(p)
            return self.in_min_member(h, cell) or j + 1 <= h[2]
        if p % 2 == 0:
            return self.in_min_member(h, p // 2)
        return (p + 1) // 2 <= h[2]

    def trace(self, h, mask: int) -> int:
        out = 0
        for p in bits_of(mask):
            if self.contains(h, p):
                out |= 1 << p
        return out

    def union(self, h1, h2):
        (n1, a1, m1), (n2, a2, m2) = h1, h2
        m = max(m1, m2)
        if n1 == n2:
            return (n1, a1 | a2, m)
        return (n1, a1, m) if n1 < n2 else (n2, a2, m)

    def handle_to_json(self, h):
        return {"level": h[0], "inner": points_of(h[1]), "m": h[2]}

    def handle_from_json(self, obj):
        return (int(obj["level"]), mask_of(obj["inner"]), int(obj["m"]))

    def search_window(self, depth):
        # Cantor pairing spreads each level of the product over many diagonals
        return 128 if self.prime else 64

    def search_count(self, depth):
        return 400


class RestrictedOracle(OracleSystem):
    """One of the four operators applied lazily to every query.

    Handles are the base oracle's handles; for subtract and trace they
    denote the transformed member.
    """

    def __init__(self, base: OracleSystem, mode: str, arg: Member):
        if mode not in ("minus", "above", "subtract", "trace"):
            raise ValueError(f"unknown restriction mode {mode!r}")
        self.base, self.mode, self.arg = base, mode, arg
        self.tag = base.tag

    def params(self):
        return {"base": self.base.spec(), "mode": self.mode, "arg": self.arg.to_json()}

    def _keep(self, h) -> bool:
        a = self.arg
        if self.mode not in ("minus", "above"):
            return True
        if not a.cofinite:
            t = self.base.trace(h, a.bits)
            return t == 0 if self.mode == "minus" else t == a.bits
        d = self.base.describe(h)
        if d is None:
            raise TypeError("cofinite restriction needs describable handles")
        return (d & a).is_empty() if self.mode == "minus" else a.issubset(d)

    def handles(self):
        seen = set()
        for h in self.base.handles():
            if not self._keep(h):
                continue
            d = self.describe(h)
            if d is not None:
                if d in seen:
                    continue
                seen.add(d)
            yield h

    def _mask(self, mask: int) -> int:
        if self.mode == "subtract":
            return (~self.arg).trace(mask)
        if self.mode == "trace":
            return self.arg.trace(mask)
        return mask

    def trace(self, h, mask: int) -> int:
        return self.base.trace(h, self._mask(mask))

    def union(self, h1, h2):
        return self.base.union(h1, h2)

    def describe(self, h):
        d = self.base.describe(h)
        if d is None:
            return None
        if self.mode == "subtract":
            return d - self.arg
        if self.mode == "trace":
            return d & self.arg
        return d

    def handle_to_json(self, h):
        return self.base.handle_to_json(h)

    def handle_from_json(self, obj):
        return self.base.handle_from_json(obj)

    def search_window(self, depth):
        return self.base.search_window(depth)

    def search_count(self, depth):
        return self.base.search_count(depth)


BUILTIN_TAGS = ("FIN", "COFIN", "FINCOFIN", "CHAIN", "TMAX", "TMIN", "TORT",
                "BLOCKS", "POWERSET", "EX5_S", "EX5_SPRIME")


def builtin(tag: str, profile: str = "linear") -> OracleSystem:
    tag = tag.upper()
    simple: dict[str, Callable[[], OracleSystem]] = {
        "FIN": FinOracle, "COFIN": CofinOracle, "FINCOFIN": FinCofinOracle,
        "CHAIN": ChainOracle, "POWERSET": PeriodicOracle,
        "EX5_S": lambda: Ex5Oracle(False), "EX5_SPRIME": lambda: Ex5Oracle(True),
    }
    if tag in simple:
        return simple[tag]()
    if tag in ("TMAX", "TMIN", "TORT"):
        return CanonicalOracle(tag[1:].lower(), profile)
    if tag == "BLOCKS":
        return BlocksOracle(profile)
    raise ValueError(f"unknown family tag {tag!r}")


def oracle_from_spec(spec: dict) -> OracleSystem:
    tag = spec["tag"].upper()
    if tag == "EXPLICIT":
        return ExplicitOracle(SetSystem.from_json(spec["system"]))
    if "mode" in spec:
        return RestrictedOracle(oracle_from_spec(spec["base"]), spec["mode"],
                                Member.from_json(spec["arg"]))
    return builtin(tag, spec.get("profile", "linear"))


def as_oracle(system) -> OracleSystem:
    return ExplicitOracle(system) if isinstance(system, SetSystem) else system


def snapshot(oracle: OracleSystem, window: GroundWindow | int, count: int) -> SetSystem:
    """Traces of the first `count` members on the window, closed under union."""
    if count < 1:
        raise ValueError("count must be >= 1")
    size = window.size if isinstance(window, GroundWindow) else int(window)
    mask = full(size)
    traces = [Member(False, oracle.trace(h, mask)) for h in islice(oracle.handles(), count)]
    return SetSystem.build(GroundWindow(size), union_closure(traces), closed=True)
