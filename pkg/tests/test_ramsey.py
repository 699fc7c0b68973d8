import pytest
from hypothesis import given, settings, strategies as st

from breadthkit.bits import bits_of, full, points_of
from breadthkit.canonical import Spread, spread_standard
from breadthkit.oracle import builtin, digit_set
from breadthkit.ramsey import (Colouring, DecisiveReport, DecisiveViolation, HalvingTrace,
                               ShatterCertificate, ShatterFailure, colours_spread,
                               decisive_check, decisive_value, diagonal_levels,
                               dichotomy_search, gamma_partition, halving_iteration,
                               realize_finite_semilattice, shatter_check,
                               shatter_members_incompressible, strengthened_terms,
                               verify_decisive_report, verify_halving, verify_shatter)
from breadthkit.setsys import Member, find_witness

E8 = spread_standard(8)


def aligned_blocks(size, count):
    return Spread(tuple(full(size) << (size * i) for i in range(count)))


def digit_members(m, width):
    return [digit_set(j).trace(full(width)) for j in range(m)]


@pytest.fixture(scope="module")
def digit_cert():
    spread = aligned_blocks(8, 4)
    cert = shatter_check(digit_members(3, 32), spread, t=1)
    assert isinstance(cert, ShatterCertificate)
    return cert


# -- colourings -------------------------------------------------------------------------

def test_trivial_colouring_colours_everything():
    assert colours_spread(Colouring.trivial(E8.join), E8, t=1)
    assert len(Colouring.trivial(7)) == 1


def test_parity_colours_consecutive_blocks():
    spread = aligned_blocks(4, 5)
    even = sum(1 << i for i in range(0, 20, 2))
    assert colours_spread(Colouring((even, full(20) & ~even)), spread, t=2)
    assert not colours_spread(Colouring((even, full(20) & ~even)), spread, t=3)


def test_class_missing_the_spread_fails():
    assert not colours_spread(Colouring((E8.join, 1 << 200)), E8, t=1)


def test_colouring_validation():
    with pytest.raises(ValueError):
        Colouring((0b11, 0b10))
    with pytest.raises(ValueError):
        Colouring(())
    with pytest.raises(ValueError):
        colours_spread(Colouring.trivial(1), E8, w=9)


# -- decisiveness --------------------------------------------------------------------------

def test_fin_values_bounded_by_size():
    sample = [Member.finite(points_of(x)) for x in range(1, 1 << 9)]
    rep = decisive_check(Colouring.trivial(E8.join), 0, sample, E8)
    assert isinstance(rep, DecisiveReport) and verify_decisive_report(rep)
    for e in rep.entries:
        assert e.value <= e.trace.bit_count()


def test_blocks_values_are_zero():
    rep = decisive_check(Colouring.trivial(E8.join), 0, builtin("BLOCKS"), E8, count=128)
    assert rep.uniform_bound == 0 and verify_decisive_report(rep)


def test_uniform_mode_returns_violator():
    sample = [full(36)]
    half = sum(1 << p for b in E8.blocks for p in list(bits_of(b))[: b.bit_count() // 2])
    out = decisive_check(Colouring.trivial(E8.join), 0, sample + [half], E8, bound=2)
    assert isinstance(out, DecisiveViolation) and out.value == 4


def test_strengthened_terms_on_even_blocks():
    x = sum(E8.block(n) for n in range(2, 9, 2))
    inside, outside = strengthened_terms(x, Colouring.trivial(E8.join), 0, E8)
    assert inside == 8 and outside == [7]
    # the plain value stays zero: each level is all in or all out
    assert decisive_value(x, Colouring.trivial(E8.join), 0, E8) == 0


def test_tampered_report_fails():
    rep = decisive_check(Colouring.trivial(E8.join), 0, builtin("FIN"), E8, count=200)
    rep.entries[-1].value += 1
    assert not verify_decisive_report(rep)


@given(st.integers(0, (1 << 36) - 1), st.integers(1, 8), st.integers(0, 7))
def test_decisive_value_monotone_in_horizon(x, h, extra):
    col = Colouring.trivial(E8.join)
    h2 = min(8, h + extra)
    a = decisive_value(x, col, 0, E8.select(range(1, h + 1)))
    b = decisive_value(x, col, 0, E8.select(range(1, h2 + 1)))
    assert a <= b


# -- atoms and shattering ------------------------------------------------------------------

def test_gamma_single_member():
    g = gamma_partition([0b0011], full(4))
    assert g.colouring.classes == (0b0011, 0b1100)


def test_gamma_nested_members_report_empty_atom():
    g = gamma_partition([0b0001, 0b0011], full(4))
    assert (1, 0) in g.empty_patterns
    assert len(g.colouring) == 3


@given(st.lists(st.integers(0, 255), min_size=1, max_size=4))
def test_gamma_partitions_window(members):
    g = gamma_partition(members, full(8))
    cover = 0
    for c in g.colouring.classes:
        assert c and not c & cover
        cover |= c
    assert cover == full(8)
    assert len(g.patterns) + len(g.empty_patterns) == 2 ** len(members)


def test_digit_family_shatters(digit_cert):
    assert digit_cert.depth == 3 and verify_shatter(digit_cert)
    assert all(c == 1 for counts in digit_cert.table.values() for c in counts)


def test_equal_members_fail_to_shatter():
    x = digit_set(0).trace(full(32))
    out = shatter_check([x, x], aligned_blocks(8, 4))
    assert isinstance(out, ShatterFailure) and out.count == 0
    assert out.pattern in {(1, 0), (0, 1)}


def test_small_blocks_cannot_shatter():
    out = shatter_check(digit_members(3, 32), aligned_blocks(4, 8), t=1)
    assert isinstance(out, ShatterFailure)


def test_tampered_shatter_table_fails(digit_cert):
    table = {k: list(v) for k, v in digit_cert.table.items()}
    first = next(iter(table))
    table[first][0] += 1
    bad = ShatterCertificate(digit_cert.members, digit_cert.spread, digit_cert.t,
                             digit_cert.onset, table, [])
    assert not verify_shatter(bad)
    assert verify_shatter(ShatterCertificate.from_json(digit_cert.to_json()))


@settings(max_examples=40)
@given(st.lists(st.integers(0, (1 << 24) - 1), min_size=1, max_size=3))
def test_shatter_implies_incompressible(members):
    out = shatter_check(members, aligned_blocks(8, 3), t=1)
    if isinstance(out, ShatterCertificate):
        assert shatter_members_incompressible(out)
        assert find_witness([Member(False, m) for m in members]) is not None


# -- halving and the dichotomy ----------------------------------------------------------------

def test_fin_halving_is_decisive():
    out = halving_iteration(builtin("FIN"), E8)
    assert isinstance(out, DecisiveReport) and verify_decisive_report(out)
    assert all(e.value <= e.trace.bit_count() for e in out.entries)


def test_powerset_halving_finds_parity():
    out = halving_iteration(builtin("POWERSET"), E8)
    assert isinstance(out, HalvingTrace)
    evens = sum(1 << i for i in range(0, 36, 2))
    assert out.y == evens
    assert verify_halving(out, E8, w=3)


def test_tampered_halving_fails():
    out = halving_iteration(builtin("POWERSET"), E8)
    out.tables[0][0] = (out.tables[0][0][0], 99, out.tables[0][0][2])
    assert not verify_halving(out, E8)


def test_blocks_halving_is_decisive_with_zero():
    out = halving_iteration(builtin("BLOCKS"), E8, count=256)
    assert isinstance(out, DecisiveReport) and out.uniform_bound == 0


def test_halving_budget_is_inconclusive():
    out = halving_iteration(builtin("FIN"), E8, budget=3)
    assert type(out).__name__ == "Inconclusive"


def test_diagonal_levels():
    assert diagonal_levels([[1, 2, 3, 4], [2, 4, 6]]) == [1, 4, 6]
    assert diagonal_levels([[3, 5]]) == [3, 5]


@pytest.mark.parametrize("tag,kind", [("POWERSET", "shatter"), ("FIN", "decisive"),
                                      ("BLOCKS", "decisive")])
def test_dichotomy_outcomes(tag, kind):
    out = dichotomy_search(builtin(tag), E8, m=2)
    assert out.kind == kind
    if kind == "shatter":
        assert len(out.rounds) == 2 and verify_shatter(out.shatter)
        assert shatter_members_incompressible(out.shatter)
        assert out.shatter.onset == 2
    else:
        # a stalled round ends the search: rounds never both succeed and fail
        assert len(out.rounds) < 2 and verify_decisive_report(out.report)
    if tag == "BLOCKS":
        assert out.report.uniform_bound == 0


def test_dichotomy_nested_levels_shrink():
    out = dichotomy_search(builtin("POWERSET"), E8, m=2)
    a, b = out.nested_levels
    assert set(b) <= set(a)


# -- finite realization ------------------------------------------------------------------------

def test_realize_chain_on_depth_two(digit_cert):
    cert2 = shatter_check(digit_members(2, 32), aligned_blocks(8, 4), t=1)
    r = realize_finite_semilattice(cert2, [[0], [0, 1]], 2)
    assert r.table == [[1, 1], [0, 1]] and not r.adjoined


def test_realize_antichain(digit_cert):
    r = realize_finite_semilattice(digit_cert, [[0], [1]], 2)
    assert r.table == [[1, 0], [0, 1]]
    assert len(set(r.points)) == 2


def test_realize_adjoins_singletons(digit_cert):
    r = realize_finite_semilattice(digit_cert, [[0, 1]], 2)
    assert r.adjoined == [frozenset([0])]
    assert r.table == [[1, 1], [1, 0]]


def test_realize_rejects_bad_input(digit_cert):
    with pytest.raises(ValueError):
        realize_finite_semilattice(digit_cert, [[0], [0]], 2)
    with pytest.raises(ValueError):
        realize_finite_semilattice(digit_cert, [[0], [1], [2], [0, 1]], 3)
    with pytest.raises(ValueError):
        realize_finite_semilattice(digit_cert, [[5]], 2)


@given(st.lists(st.frozensets(st.integers(0, 2), min_size=1), min_size=1, max_size=3, unique=True))
def test_realization_tables_match_targets(targets):
    cert = shatter_check(digit_members(3, 32), aligned_blocks(8, 4), t=1)
    try:
        r = realize_finite_semilattice(cert, [sorted(c) for c in targets], 3)
    except ValueError as e:
        assert "depth" in str(e)
        return
    for j, g in enumerate(r.points):
        assert [(cert.members[n] >> g) & 1 for n in range(len(r.targets))] == \
            [int(j in c) for c in r.targets]
