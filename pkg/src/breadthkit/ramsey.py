"""Colourings of spreads, decisive checks, atom partitions, shattering,
the halving iteration, the dichotomy search and finite realization.

Everything works on traces: members are masks over join(E) for the spread
at hand.  "Tends to infinity along N" becomes "is at least `t` on each
recorded level, and at least `w` levels are recorded".  Because blocks are
disjoint, a member only clears `t` on ``|x| / t`` levels, so finite
members of bounded size cannot fake growth once ``t * w`` exceeds it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Any, Sequence

from .bits import lowest, points_of
from .canonical import Spread
from .oracle import OracleSystem, as_oracle
from .setsys import Budget, BudgetExceeded, Member, as_budget, find_witness

Pattern = tuple[int, ...]  # 1 = inside x_j, 0 = inside its complement


@dataclass(frozen=True)
class Colouring:
    classes: tuple[int, ...]

    def __post_init__(self):
        if not self.classes:
            raise ValueError("a colouring needs at least one class")
        seen = 0
        for c in self.classes:
            if c & seen:
                raise ValueError("colour classes must be disjoint")
            seen |= c

    @property
    def cover(self) -> int:
        out = 0
        for c in self.classes:
            out |= c
        return out

    def covers(self, mask: int) -> bool:
        return mask & ~self.cover == 0

    def __len__(self) -> int:
        return len(self.classes)

    @classmethod
    def trivial(cls, mask: int) -> "Colouring":
        return cls((mask,))

    def to_json(self):
        return [points_of(c) for c in self.classes]


def colours_spread(colouring: Colouring, spread: Spread, t: int = 1, w: int | None = None) -> bool:
    """Every class meets each of the last `w` blocks in at least `t` points."""
    w = len(spread) if w is None else w
    if not 0 < w <= len(spread):
        raise ValueError("tail length must be between 1 and the number of blocks")
    return all((c & b).bit_count() >= t
               for b in spread.blocks[-w:] for c in colouring.classes)


# ---------------------------------------------------------------------------
# decisiveness


def level_value(x: int, colouring: Colouring, c0: int, block: int) -> int:
    others = min(((~x) & c & block).bit_count() for c in colouring.classes)
    return min((x & colouring.classes[c0] & block).bit_count(), others)


def decisive_value(x: int, colouring: Colouring, c0: int, spread: Spread) -> int:
    """Largest level value over the spread's blocks."""
    return max(level_value(x, colouring, c0, b) for b in spread.blocks)


def strengthened_terms(x: int, colouring: Colouring, c0: int, spread: Spread
                       ) -> tuple[int, list[int]]:
    """The sups taken separately: over levels of ``|x & C0 & E_n|`` and, per
    class, of ``|~x & C & E_n|``."""
    inside = max((x & colouring.classes[c0] & b).bit_count() for b in spread.blocks)
    outside = [max(((~x) & c & b).bit_count() for b in spread.blocks)
               for c in colouring.classes]
    return inside, outside


@dataclass
class SampleEntry:
    label: str
    trace: int
    value: int


@dataclass
class DecisiveReport:
    colouring: Colouring
    decisive_class: int
    spread: Spread
    entries: list[SampleEntry]
    sample: str = ""

    @property
    def uniform_bound(self) -> int:
        return max((e.value for e in self.entries), default=0)

    def to_json(self) -> dict:
        return {"kind": "decisive_report", "colouring": self.colouring.to_json(),
                "decisive_class": self.decisive_class, "spread": self.spread.to_json(),
                "sample": self.sample, "uniform_bound": self.uniform_bound,
                "table": [{"member": e.label, "trace": points_of(e.trace), "value": e.value}
                          for e in self.entries]}


@dataclass
class DecisiveViolation:
    label: str
    trace: int
    value: int
    bound: int


def sample_traces(source, mask: int, count: int | None = None) -> list[tuple[int, Any, str]]:
    """(trace, handle, label) for a list of members/masks or an oracle sample."""
    if isinstance(source, OracleSystem) or hasattr(source, "members"):
        oracle = as_oracle(source)
        count = oracle.search_count(3) if count is None else count
        out = []
        for h in oracle.first(count):
            d = oracle.describe(h)
            out.append((oracle.trace(h, mask), h, repr(d) if d is not None else repr(h)))
        return out
    out = []
    for x in source:
        if isinstance(x, Member):
            out.append((x.trace(mask), x, repr(x)))
        else:
            out.append((x & mask, x, "{" + ",".join(map(str, points_of(x))) + "}"))
    return out


def decisive_check(colouring: Colouring, c0: int, sample, spread: Spread,
                   horizon: int | None = None, bound: int | None = None,
                   count: int | None = None) -> "DecisiveReport | DecisiveViolation":
    """Per-member decisive values over the first `horizon` levels.

    With `bound` set (uniform mode) the first member whose value exceeds it
    is returned instead of a report.
    """
    if not 0 <= c0 < len(colouring):
        raise ValueError("decisive class index out of range")
    used = spread if horizon is None else spread.select(range(1, horizon + 1))
    entries = []
    for trace, _, label in sample_traces(sample, used.join, count):
        v = decisive_value(trace, colouring, c0, used)
        if bound is not None and v > bound:
            return DecisiveViolation(label, trace, v, bound)
        entries.append(SampleEntry(label, trace, v))
    desc = f"{len(entries)} members"
    return DecisiveReport(colouring, c0, used, entries, desc)


def verify_decisive_report(report: DecisiveReport) -> bool:
    """Recompute every table entry level by level."""
    c = report.colouring.classes
    for e in report.entries:
        best = 0
        for b in report.spread.blocks:
            terms = [bin(e.trace & c[report.decisive_class] & b).count("1")]
            terms += [bin(~e.trace & k & b).count("1") for k in c]
            best = max(best, min(terms))
        if best != e.value:
            return False
    return True


# ---------------------------------------------------------------------------
# atoms and shattering


@dataclass
class GammaPartition:
    colouring: Colouring
    patterns: list[Pattern]
    empty_patterns: list[Pattern]


def atom(members: Sequence[int], pattern: Pattern, window: int) -> int:
    out = window
    for x, s in zip(members, pattern):
        out &= x if s else ~x
    return out


def gamma_partition(members: Sequence[int], window: int) -> GammaPartition:
    if not members:
        raise ValueError("need at least one member")
    classes, pats, empty = [], [], []
    for pat in product((1, 0), repeat=len(members)):
        a = atom(members, pat, window)
        if a:
            classes.append(a)
            pats.append(pat)
        else:
            empty.append(pat)
    return GammaPartition(Colouring(tuple(classes)), pats, empty)


@dataclass
class ShatterCertificate:
    members: list[int]
    spread: Spread
    t: int
    onset: int
    table: dict[Pattern, list[int]]  # counts at levels onset..len(spread)
    handles: list = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.members)

    def to_json(self) -> dict:
        return {"kind": "shatter_certificate", "members": [points_of(m) for m in self.members],
                "spread": self.spread.to_json(), "t": self.t, "onset": self.onset,
                "table": [{"pattern": list(p), "counts": c} for p, c in self.table.items()]}

    @classmethod
    def from_json(cls, obj) -> "ShatterCertificate":
        from .bits import mask_of
        return cls([mask_of(m) for m in obj["members"]], Spread.from_json(obj["spread"]),
                   int(obj["t"]), int(obj["onset"]),
                   {tuple(r["pattern"]): list(r["counts"]) for r in obj["table"]})


@dataclass
class ShatterFailure:
    pattern: Pattern
    level: int
    count: int


def _pattern_counts(members, spread, onset):
    table = {}
    for pat in product((1, 0), repeat=len(members)):
        table[pat] = [atom(members, pat, spread.block(n)).bit_count()
                      for n in range(onset, len(spread) + 1)]
    return table


def shatter_check(members: Sequence[int], spread: Spread, t: int = 1, onset: int = 1,
                  handles: Sequence | None = None) -> "ShatterCertificate | ShatterFailure":
    if not 1 <= onset <= len(spread):
        raise ValueError("onset must name a level of the spread")
    members = list(members)
    table = _pattern_counts(members, spread, onset)
    for pat, counts in table.items():
        for n, c in enumerate(counts, start=onset):
            if c < t:
                return ShatterFailure(pat, n, c)
    return ShatterCertificate(members, spread, t, onset, table, list(handles or []))


def verify_shatter(cert: ShatterCertificate) -> bool:
    """Recount every atom point by point."""
    rows = range(cert.onset, len(cert.spread) + 1)
    for pat in product((1, 0), repeat=cert.depth):
        got = []
        for n in rows:
            c = sum(1 for p in points_of(cert.spread.block(n))
                    if all(((x >> p) & 1) == s for x, s in zip(cert.members, pat)))
            if c < cert.t:
                return False
            got.append(c)
        if cert.table.get(pat) != got:
            return False
    return True


def shatter_members_incompressible(cert: ShatterCertificate) -> bool:
    fam = [Member(False, m) for m in cert.members]
    return find_witness(fam) is not None


# ---------------------------------------------------------------------------
# halving and the dichotomy


@dataclass
class HalvingTrace:
    y: int
    handle: Any
    levels: list[int]
    colouring: Colouring
    t: int
    # per class: [(level, |y & C & E_n|, |~y & C & E_n|)]
    tables: list[list[tuple[int, int, int]]]
    chosen: list[Any] = field(default_factory=list)


@dataclass
class Inconclusive:
    reason: str
    nodes: int
    partial: Any = None


def _halving_table(y, colouring, spread, levels):
    return [[(n, (y & c & spread.block(n)).bit_count(), (~y & c & spread.block(n)).bit_count())
             for n in levels] for c in colouring.classes]


def verify_halving(trace: HalvingTrace, spread: Spread, w: int = 1) -> bool:
    if len(trace.levels) < w:
        return False
    fresh = _halving_table(trace.y, trace.colouring, spread, trace.levels)
    return fresh == trace.tables and all(a >= trace.t and b >= trace.t
                                         for rows in fresh for _, a, b in rows)


def halving_iteration(source, spread: Spread, colouring: Colouring | None = None,
                      t: int = 1, w: int = 3, count: int | None = None,
                      levels: Sequence[int] | None = None,
                      budget: "Budget | int | None" = None
                      ) -> "HalvingTrace | DecisiveReport | Inconclusive":
    """Build ``y = x_1 | ... | x_d`` halving every colour class, or stop with a
    decisive report for the first class that no sampled member attacks.

    Round k looks for x with ``|x & C_k & ~y & E_n| >= t`` and
    ``|~x & C_j & ~y & E_n| >= t`` for all j, keeping the levels where both
    hold; at least `w` levels must survive.
    """
    budget = as_budget(budget)
    j = spread.join
    colouring = colouring or Colouring.trivial(j)
    pool = sample_traces(source, j, count)
    current = list(range(1, len(spread) + 1)) if levels is None else list(levels)
    y, handle, chosen = 0, None, []
    oracle = as_oracle(source) if isinstance(source, OracleSystem) or hasattr(source, "members") else None
    try:
        for k, ck in enumerate(colouring.classes):
            found = None
            for trace, h, _ in pool:
                budget.spend()
                keep = []
                for n in current:
                    free = ~y & spread.block(n)
                    if (trace & ck & free).bit_count() < t:
                        continue
                    if all((~trace & c & free).bit_count() >= t for c in colouring.classes):
                        keep.append(n)
                if len(keep) >= w:
                    found = (trace, h, keep)
                    break
            if found is None:
                refined = Spread(tuple(~y & spread.block(n) for n in current))
                entries = [SampleEntry(label, tr, decisive_value(tr, colouring, k, refined))
                           for tr, _, label in pool]
                return DecisiveReport(colouring, k, refined, entries,
                                      f"{len(pool)} members, round {k + 1}")
            trace, h, keep = found
            y |= trace
            chosen.append(h)
            if oracle is not None:
                handle = h if handle is None else oracle.union(handle, h)
            current = keep
    except BudgetExceeded as e:
        return Inconclusive("budget exhausted during halving", e.used,
                            {"y": points_of(y), "levels": current})
    tables = _halving_table(y, colouring, spread, current)
    return HalvingTrace(y, handle, current, colouring, t, tables, chosen)


def diagonal_levels(nested: Sequence[Sequence[int]]) -> list[int]:
    """n(i) = the i-th level of set min(i, m), while it exists.

    Nested sets make this increasing: the i-th element of a subset is at
    least the i-th element of the superset.
    """
    out: list[int] = []
    m = len(nested)
    i = 1
    while i <= len(nested[min(i, m) - 1]):
        out.append(nested[min(i, m) - 1][i - 1])
        i += 1
    return out


@dataclass
class DichotomyOutcome:
    kind: str  # shatter | decisive | inconclusive
    shatter: ShatterCertificate | None = None
    spread: Spread | None = None
    report: DecisiveReport | None = None
    rounds: list[HalvingTrace] = field(default_factory=list)
    nested_levels: list[list[int]] = field(default_factory=list)
    note: str = ""


def dichotomy_search(source, spread: Spread, m: int = 2, t: int = 1, w: int = 3,
                     count: int | None = None, budget: "Budget | int | None" = None
                     ) -> DichotomyOutcome:
    """Accumulate halving members a_1..a_m against their own atom colourings.

    Success ends in a shatter certificate on the diagonal sub-spread with
    onset m; a stalled round returns its refined spread and decisive report.
    """
    if m < 1:
        raise ValueError("depth must be >= 1")
    budget = as_budget(budget)
    j = spread.join
    members: list[int] = []
    handles: list = []
    nested: list[list[int]] = []
    rounds: list[HalvingTrace] = []
    levels = list(range(1, len(spread) + 1))
    for _ in range(m):
        colouring = (Colouring.trivial(j) if not members
                     else gamma_partition(members, j).colouring)
        res = halving_iteration(source, spread, colouring, t, w, count, levels, budget)
        if isinstance(res, DecisiveReport):
            return DichotomyOutcome("decisive", spread=res.spread, report=res,
                                    rounds=rounds, nested_levels=nested)
        if isinstance(res, Inconclusive):
            return DichotomyOutcome("inconclusive", rounds=rounds, nested_levels=nested,
                                    note=res.reason)
        rounds.append(res)
        members.append(res.y)
        handles.append(res.handle)
        levels = res.levels
        nested.append(list(levels))
    diag = diagonal_levels(nested)
    if len(diag) < m:
        return DichotomyOutcome("inconclusive", rounds=rounds, nested_levels=nested,
                                note="diagonal too short for the onset")
    g = spread.select(diag)
    cert = shatter_check(members, g, t, onset=m, handles=handles)
    if isinstance(cert, ShatterFailure):
        raise AssertionError(f"halving rounds did not shatter: {cert}")
    return DichotomyOutcome("shatter", shatter=cert, rounds=rounds, nested_levels=nested,
                            spread=g)


# ---------------------------------------------------------------------------
# finite realization


@dataclass
class Realization:
    points: list[int]
    targets: list[frozenset[int]]
    table: list[list[int]]  # table[j][n] = 1 iff point j lies in member n
    adjoined: list[frozenset[int]]
    level: int


def _separates(targets, k):
    sigs = {tuple(j in c for c in targets) for j in range(k)}
    return len(sigs) == k


def realize_finite_semilattice(cert: ShatterCertificate, targets: Sequence[Sequence[int]],
                               k: int) -> Realization:
    """Points g_0..g_{k-1} with ``g_j in members[n]`` iff ``j in targets[n]``.

    If the targets do not separate points, singletons are appended until they
    do.  Each point is taken from one certified block at or after the onset.
    """
    listed = [frozenset(c) for c in targets]
    if len(set(listed)) != len(listed):
        raise ValueError("targets must be listed without repetition")
    for c in listed:
        if any(not 0 <= j < k for j in c):
            raise ValueError(f"target {sorted(c)} leaves 0..{k - 1}")
    adjoined = []
    if not _separates(listed, k):
        for j in range(k):
            s = frozenset([j])
            if s not in listed and not _separates(listed + adjoined, k):
                adjoined.append(s)
    full_list = listed + adjoined
    if len(full_list) > cert.depth:
        raise ValueError(f"certificate depth {cert.depth} < {len(full_list)} listed members")
    if cert.t < 1:
        raise ValueError("certificate threshold must be at least 1")
    level = cert.onset
    block = cert.spread.block(level)
    points = []
    for j in range(k):
        pat = tuple(int(j in c) for c in full_list)
        cell = atom(cert.members[: len(full_list)], pat, block)
        if not cell:
            raise ValueError(f"atom {pat} is empty in block {level}")
        points.append(lowest(cell))
    table = [[(cert.members[n] >> g) & 1 for n in range(len(full_list))] for g in points]
    for j, row in enumerate(table):
        if row != [int(j in c) for c in full_list]:
            raise AssertionError("realization table mismatch")
    if len(set(points)) != k:
        raise AssertionError("realized points are not distinct")
    return Realization(points, full_list, table, adjoined, level)
