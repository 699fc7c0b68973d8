"""Certificate-producing searches for the three level types, the two
auxiliary conditions, the chain construction and spread transfer.

Searches run on a finite horizon: the traces of an oracle's first
`count` members on positions ``0..window-1``.  Whatever they return is
re-checked against the oracle itself by `verify_certificate`, which shares
no code with the searches beyond trace queries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Any, Callable, Mapping, Sequence

from .bits import bits_of, full, lowest, mask_of, points_of, submasks
from .canonical import TYPE_TAGS, Spread, pattern_mask
from .oracle import OracleSystem, as_oracle
from .setsys import (Budget, BudgetExceeded, Member, WindowExhausted, as_budget,
                     find_witness, incompressible_families, private_masks, verify_witness)

DEFAULT_BUDGET = 200_000


@dataclass
class TypeCertificate:
    type_tag: str
    spread: Spread
    realization: dict[tuple[int, int], Any]  # (level, inner mask) -> handle

    @property
    def depth(self) -> int:
        return len(self.spread)

    def singleton_handles(self, n: int) -> list:
        return [self.realization[(n, 1 << p)] for p in bits_of(self.spread.block(n))]


@dataclass
class DetectResult:
    type_tag: str
    certificate: TypeCertificate | None
    nodes: int
    budget_exhausted: bool
    window: int
    count: int

    @property
    def horizon_exhaustive(self) -> bool:
        """The whole search space at this horizon was explored."""
        return self.certificate is None and not self.budget_exhausted


def certificate_problems(cert: TypeCertificate, oracle) -> list[str]:
    """Everything wrong with `cert`, recomputed from oracle traces."""
    oracle = as_oracle(oracle)
    problems = []
    if cert.type_tag not in TYPE_TAGS:
        return [f"unknown type {cert.type_tag!r}"]
    seen = 0
    for i, b in enumerate(cert.spread.blocks, start=1):
        if not b:
            problems.append(f"block {i} is empty")
        if b & seen:
            problems.append(f"block {i} meets an earlier block")
        seen |= b
    sizes = [b.bit_count() for b in cert.spread.blocks]
    if any(a > b for a, b in zip(sizes, sizes[1:])):
        problems.append(f"block sizes {sizes} decrease")
    if problems:
        return problems
    spread = cert.spread
    target = spread.join
    wanted = {(n, a) for n in range(1, len(spread) + 1) for a in submasks(spread.block(n))}
    missing = wanted - set(cert.realization)
    extra = set(cert.realization) - wanted
    if missing:
        problems.append(f"{len(missing)} level patterns lack a realization")
    if extra:
        problems.append(f"{len(extra)} realizations do not name a level pattern")
    for key in sorted(wanted & set(cert.realization)):
        n, a = key
        got = oracle.trace(cert.realization[key], target)
        if got != pattern_mask(cert.type_tag, spread, n, a):
            problems.append(f"level {n} inner {points_of(a)}: trace {points_of(got)}")
    return problems


def verify_certificate(cert: TypeCertificate, oracle) -> bool:
    return not certificate_problems(cert, oracle)


def _fold_union(oracle, handles):
    it = iter(handles)
    out = next(it)
    for h in it:
        out = oracle.union(out, h)
    return out


def _complete(oracle, type_tag: str, spread: Spread, singles: dict) -> TypeCertificate:
    """Realize every inner set as the union of its singleton realizations."""
    real = {}
    for n in range(1, len(spread) + 1):
        for a in submasks(spread.block(n)):
            real[(n, a)] = _fold_union(oracle, [singles[(n, p)] for p in bits_of(a)])
    return TypeCertificate(type_tag, spread, real)


def _dedup(items):
    seen: dict[int, Any] = {}
    for m, h in items:
        if m:
            seen.setdefault(m, h)
    return list(seen.items())


def _grouped(cands, idx, part):
    """Unions of consecutive groups of `part` members of a family."""
    groups = []
    for g in range(0, len(idx), part):
        members = [cands[i] for i in idx[g:g + part]]
        m = 0
        for t, _ in members:
            m |= t
        groups.append((m, [h for _, h in members]))
    return groups


def _witness_choices(privs, budget):
    for choice in product(*[points_of(p) for p in privs]):
        budget.spend()
        yield choice


class _Found(Exception):
    def __init__(self, singles, blocks):
        self.singles, self.blocks = singles, blocks


def _search_max(oracle, pool, depth, budget):
    # strip earlier joins, take an incompressible level-n family, its join
    # becomes the next strip and its witness the next block
    def rec(n, p, earlier, singles, blocks):
        if n > depth:
            raise _Found(singles, blocks)
        cands = _dedup((t & ~p, h) for t, h in pool)
        masks = [m for m, _ in cands]
        for idx in incompressible_families(masks, n, budget):
            fam = [cands[i] for i in idx]
            privs = private_masks([m for m, _ in fam])
            pts = [lowest(q) for q in privs]
            new = dict(singles)
            for (_, h), pt in zip(fam, pts):
                new[(n, pt)] = _fold_union(oracle, [h] + earlier) if earlier else h
            d = 0
            for m, _ in fam:
                d |= m
            rec(n + 1, p | d, earlier + [h for _, h in fam], new, blocks + [mask_of(pts)])

    rec(1, 0, [], {}, [])


def _search_min(oracle, pool, depth, budget, part, wmask):
    # avoid the blocks chosen so far, trace on the running intersection
    def rec(n, avoid, d, singles, blocks):
        if n > depth:
            raise _Found(singles, blocks)
        cands = _dedup((t & d, h) for t, h in pool if not t & avoid)
        masks = [m for m, _ in cands]
        for idx in incompressible_families(masks, part * n, budget):
            groups = _grouped(cands, idx, part)
            privs = private_masks([m for m, _ in groups])
            c = d
            for m, _ in groups:
                c &= m
            for pts in _witness_choices(privs, budget):
                new = dict(singles)
                for (_, hs), pt in zip(groups, pts):
                    new[(n, pt)] = _fold_union(oracle, hs)
                block = mask_of(pts)
                rec(n + 1, avoid | block, c, new, blocks + [block])

    rec(1, 0, wmask, {}, [])


def _search_ort(oracle, pool, depth, budget, part, wmask):
    # members containing all chosen blocks, traced on the running meet;
    # take n + part merged members and keep n of them

    def rec(n, have, q, singles, blocks):
        if n > depth:
            raise _Found(singles, blocks)
        cands = _dedup((t & q, (t, h)) for t, h in pool if t & have == have)
        masks = [m for m, _ in cands]
        for idx in incompressible_families(masks, part * (n + part), budget):
            groups = []
            for g in range(0, len(idx), part):
                chunk = [cands[i] for i in idx[g:g + part]]
                m = full_t = 0
                for tm, (t, _) in chunk:
                    m |= tm
                    full_t |= t
                groups.append((m, full_t, [h for _, (_, h) in chunk]))
            privs = private_masks([m for m, _, _ in groups])
            pts_all = [lowest(x) for x in privs]
            for keep in combinations(range(len(groups)), n):
                budget.spend()
                block = mask_of(pts_all[i] for i in keep)
                c = q
                new = dict(singles)
                for i in keep:
                    c &= groups[i][1]
                    new[(n, pts_all[i])] = _fold_union(oracle, groups[i][2])
                rec(n + 1, have | block, c, new, blocks + [block])

    rec(1, 0, wmask, {}, [])


def detect_type(oracle, type_tag: str, depth: int, budget: "Budget | int | None" = DEFAULT_BUDGET,
                window: int | None = None, count: int | None = None,
                part: int = 1) -> DetectResult:
    """Search for a depth-`depth` certificate of the given type.

    `part` is the group size of the amplification step for min and ort:
    families of size ``part * n`` (min) or ``part * (n + part)`` (ort) are
    cut into consecutive groups whose unions form the working family.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if type_tag not in TYPE_TAGS:
        raise ValueError(f"unknown type tag {type_tag!r}")
    oracle = as_oracle(oracle)
    budget = as_budget(budget)
    start = budget.used
    window = oracle.search_window(depth) if window is None else window
    count = oracle.search_count(depth) if count is None else count
    pool = oracle.pool(window, count)
    exhausted = False
    cert = None
    try:
        if type_tag == "max":
            _search_max(oracle, pool, depth, budget)
        elif type_tag == "min":
            _search_min(oracle, pool, depth, budget, part, full(window))
        else:
            _search_ort(oracle, pool, depth, budget, part, full(window))
    except _Found as f:
        cert = _complete(oracle, type_tag, Spread(tuple(f.blocks)), f.singles)
        if not verify_certificate(cert, oracle):
            raise AssertionError(f"search produced a bad certificate: "
                                 f"{certificate_problems(cert, oracle)[:3]}")
    except BudgetExceeded:
        exhausted = True
    return DetectResult(type_tag, cert, budget.used - start, exhausted, window, count)


def detect_any(oracle, depth: int, budget=DEFAULT_BUDGET, **kw) -> list[DetectResult]:
    """Run every type; the types are not exclusive, so all hits are kept."""
    return [detect_type(oracle, t, depth, budget, **kw) for t in TYPE_TAGS]


# ---------------------------------------------------------------------------
# auxiliary conditions


@dataclass
class ConditionReport:
    condition: str
    k: int
    k_thick: int
    params: dict
    outcome: str  # satisfied | refuted | precondition-failed
    evidence: dict = field(default_factory=dict)
    nodes: int = 0
    exhaustive: bool = False
    budget_exhausted: bool = False

    @property
    def satisfied(self) -> bool:
        return self.outcome == "satisfied"


def _has_family(masks, k, budget):
    for idx in incompressible_families(_dedup_masks(masks), k, budget):
        fam = [_dedup_masks(masks)[i] for i in idx]
        return fam
    return None


def _dedup_masks(masks):
    return list(dict.fromkeys(m for m in masks if m))


def condition_probe(oracle, condition: str, k: int, p: Member | None = None,
                    c: Member | None = None, gamma: Member | None = None,
                    k_thick: int | None = None, budget=DEFAULT_BUDGET,
                    window: int | None = None, count: int | None = None) -> ConditionReport:
    """Finite-horizon probe of condition A (parameter `p`) or B (`c`, `gamma`).

    "Thick" means an incompressible family of size `k_thick` (default
    ``k + 2``) exists among the traces in question.
    """
    condition = condition.upper()
    if condition not in ("A", "B"):
        raise ValueError("condition must be A or B")
    oracle = as_oracle(oracle)
    budget = as_budget(budget)
    start = budget.used
    k_thick = k + 2 if k_thick is None else k_thick
    window = oracle.search_window(k_thick) if window is None else window
    count = oracle.search_count(k_thick) if count is None else count
    w = full(window)
    pool = oracle.pool(mask=w, count=count)
    traces = [t for t, _ in pool]
    report = ConditionReport(condition, k, k_thick, {}, "refuted")
    try:
        if condition == "A":
            pm = p.trace(w) if p is not None else 0
            report.params = {"p": points_of(pm)}
            base = [t & ~pm for t in traces]
            thick = _has_family(base, k_thick, budget)
            if thick is None:
                report.outcome = "precondition-failed"
            else:
                report.evidence["precondition_family"] = [points_of(m) for m in thick]
                cands = _dedup([(m, h) for m, (_, h) in zip(base, pool)])
                for idx in incompressible_families([m for m, _ in cands], k, budget):
                    fam = [cands[i][0] for i in idx]
                    d = 0
                    for m in fam:
                        d |= m
                    rest = _has_family([m & ~d for m in base], k_thick, budget)
                    if rest is not None:
                        report.outcome = "satisfied"
                        report.evidence.update(
                            family=[points_of(m) for m in fam],
                            handles=[cands[i][1] for i in idx],
                            witness=[lowest(q) for q in private_masks(fam)],
                            thick_family=[points_of(m) for m in rest],
                            thick_witness=[lowest(q) for q in private_masks(rest)])
                        break
        else:
            cm = c.trace(w) if c is not None else w
            gm = gamma.trace(w) if gamma is not None else 0
            report.params = {"c": points_of(cm), "gamma": points_of(gm)}
            base = [t & cm for t in traces if not t & gm]
            thick = _has_family(base, k_thick, budget)
            if thick is None:
                report.outcome = "precondition-failed"
            else:
                report.evidence["precondition_family"] = [points_of(m) for m in thick]
                cands = _dedup_masks(base)
                for idx in incompressible_families(cands, k, budget):
                    fam = [cands[i] for i in idx]
                    for pts in _witness_choices(private_masks(fam), budget):
                        e = mask_of(pts)
                        rest = _has_family([t & cm for t in traces if not t & (gm | e)],
                                           k_thick, budget)
                        if rest is not None:
                            report.outcome = "satisfied"
                            report.evidence.update(
                                family=[points_of(m) for m in fam], witness=list(pts),
                                thick_family=[points_of(m) for m in rest],
                                thick_witness=[lowest(q) for q in private_masks(rest)])
                            break
                    if report.satisfied:
                        break
    except BudgetExceeded:
        report.budget_exhausted = True
        report.outcome = "refuted" if report.outcome == "refuted" else report.outcome
    report.nodes = budget.used - start
    report.exhaustive = (not report.budget_exhausted and report.outcome != "satisfied"
                         and oracle.finite and count >= oracle.search_count(k_thick)
                         and window > _support_width(oracle))
    return report


def _support_width(oracle) -> int:
    return max((oracle.describe(h).bits.bit_length() for h in oracle.handles()), default=0)


def verify_condition_report(report: ConditionReport) -> bool:
    """Re-check the family/witness evidence of a satisfied report."""
    if not report.satisfied:
        return True
    ev = report.evidence
    fam = [Member.finite(m) for m in ev["family"]]
    thick = [Member.finite(m) for m in ev["thick_family"]]
    ok = verify_witness(fam, ev["witness"]) and verify_witness(thick, ev["thick_witness"])
    ok = ok and len(fam) == report.k and len(thick) == report.k_thick
    if report.condition == "B":
        e = set(ev["witness"])
        ok = ok and not any(e & set(m) for m in ev["thick_family"])
    else:
        d = set().union(*ev["family"])
        ok = ok and not any(d & set(m) for m in ev["thick_family"])
    return ok


# ---------------------------------------------------------------------------
# nested chains


@dataclass
class ChainCertificate:
    handles: list
    witnesses: list[tuple[int, ...]]


def _described_or_traced(oracle, handles, window):
    described = [oracle.describe(h) for h in handles]
    if all(d is not None for d in described):
        return described
    if window is None:
        raise ValueError("undescribable handles need an explicit window")
    w = full(window)
    return [Member(False, oracle.trace(h, w)) for h in handles]


def chain_certificate(handles: Sequence, oracle, window: int | None = None) -> ChainCertificate:
    oracle = as_oracle(oracle)
    members = _described_or_traced(oracle, handles, window)
    wits = []
    for m in range(1, len(members) + 1):
        wit = find_witness(members[:m])
        if wit is None:
            raise ValueError(f"chain prefix of length {m} is compressible")
        wits.append(wit)
    return ChainCertificate(list(handles), wits)


def verify_chain(chain: ChainCertificate, oracle, window: int | None = None) -> bool:
    members = _described_or_traced(as_oracle(oracle), chain.handles, window)
    return len(chain.witnesses) == len(members) and all(
        verify_witness(members[:m], w) for m, w in enumerate(chain.witnesses, start=1))


def square_gaps(j: int) -> int:
    return j * j


def chain_to_tmax(chain: ChainCertificate | Sequence, oracle, depth: int,
                  gaps: Callable[[int], int] = square_gaps,
                  window: int | None = None) -> TypeCertificate:
    """Max-certificate from a nested incompressible chain.

    Block ``j`` gets ``gaps(j)`` points: with cut points
    ``n_j = gaps(1) + ... + gaps(j)`` and ``d_j`` the union of the first
    ``n_j`` chain members, it is a witness of members ``n_{j-1}+1 .. n_j``
    stripped of ``d_{j-1}``, so it lies in ``d_j \\ d_{j-1}``.
    """
    oracle = as_oracle(oracle)
    handles = chain.handles if isinstance(chain, ChainCertificate) else list(chain)
    cuts = [0]
    for j in range(1, depth + 1):
        if gaps(j) < 1:
            raise ValueError(f"gap {j} must be positive")
        cuts.append(cuts[-1] + gaps(j))
    if len(handles) < cuts[-1]:
        raise ValueError(f"chain of length {len(handles)} too short; need {cuts[-1]}")
    members = _described_or_traced(oracle, handles[:cuts[-1]], window)
    singles = {}
    blocks = []
    d_prev: Member | None = None
    for j in range(1, depth + 1):
        lo, hi = cuts[j - 1], cuts[j]
        stripped = [members[i] - d_prev if d_prev is not None else members[i]
                    for i in range(lo, hi)]
        wit = find_witness(stripped)
        if wit is None:
            raise ValueError(f"stripped family for block {j} is compressible")
        for i, pt in zip(range(lo, hi), wit):
            singles[(j, pt)] = _fold_union(oracle, [handles[i]] + list(handles[:lo]))
        blocks.append(mask_of(wit))
        for i in range(lo, hi):
            d_prev = members[i] if d_prev is None else d_prev | members[i]
    cert = _complete(oracle, "max", Spread(tuple(blocks)), singles)
    if not verify_certificate(cert, oracle):
        raise AssertionError(certificate_problems(cert, oracle)[:3])
    return cert


# ---------------------------------------------------------------------------
# transfer between presentations


class CorrespondenceError(ValueError):
    pass


def _private_point(target, h, others, window, max_window):
    d = target.describe(h)
    ds = [target.describe(o) for o in others]
    if d is not None and all(x is not None for x in ds):
        rest = d
        for x in ds:
            rest = rest - x
        if rest.is_empty():
            return None
        if rest.cofinite:
            p = 0
            while p in set(rest.support) or p not in rest:
                p += 1
            return p
        return lowest(rest.bits)
    w = window
    while w <= max_window:
        mask = full(w)
        m = target.trace(h, mask)
        for o in others:
            m &= ~target.trace(o, mask)
        if m:
            return lowest(m)
        w *= 2
    raise WindowExhausted(f"no private point below {max_window}")


def transfer_spread(cert: TypeCertificate, source, target,
                    correspondence: Mapping | Callable, window: int = 64,
                    max_window: int = 1 << 14) -> tuple[Spread, TypeCertificate]:
    """Carry a max-certificate to another presentation of the same semilattice.

    `correspondence` maps source handles to target handles and must respect
    unions on every handle touched.
    """
    if cert.type_tag != "max":
        raise ValueError("only max-certificates transfer")
    source, target = as_oracle(source), as_oracle(target)
    corr = correspondence if callable(correspondence) else correspondence.__getitem__
    levels = [cert.singleton_handles(n) for n in range(1, cert.depth + 1)]
    flat = [h for lv in levels for h in lv]
    image = {id(h): corr(h) for h in flat}
    for i, a in enumerate(flat):
        for b in flat[i + 1:]:
            if not _same(target, corr(source.union(a, b)),
                         target.union(image[id(a)], image[id(b)]), window):
                raise CorrespondenceError("correspondence does not preserve unions")
    blocks = []
    singles = {}
    for n, lv in enumerate(levels, start=1):
        earlier = [image[id(h)] for lvl in levels[: n - 1] for h in lvl]
        pts = []
        for j, h in enumerate(lv):
            others = earlier + [image[id(g)] for k, g in enumerate(lv) if k != j]
            pt = _private_point(target, image[id(h)], others, window, max_window)
            if pt is None:
                raise CorrespondenceError("image member has no private point")
            pts.append(pt)
            singles[(n, pt)] = _fold_union(target, [image[id(h)]] + earlier)
        blocks.append(mask_of(pts))
    spread = Spread(tuple(blocks))
    new = _complete(target, "max", spread, singles)
    if not verify_certificate(new, target):
        raise AssertionError(certificate_problems(new, target)[:3])
    return spread, new


def _same(oracle, h1, h2, window) -> bool:
    d1, d2 = oracle.describe(h1), oracle.describe(h2)
    if d1 is not None and d2 is not None:
        return d1 == d2
    mask = full(window)
    return oracle.trace(h1, mask) == oracle.trace(h2, mask)
