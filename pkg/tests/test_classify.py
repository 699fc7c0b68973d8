import pytest
from hypothesis import given, settings, strategies as st

from breadthkit.bits import bits_of, points_of
from breadthkit.canonical import (Spread, canonical_family, cayley_embed, free_semilattice,
                                  refines, spread_standard, table_of_system)
from breadthkit.classify import (ChainCertificate, CorrespondenceError, TypeCertificate,
                                 certificate_problems, chain_certificate, chain_to_tmax,
                                 condition_probe, detect_any, detect_type, transfer_spread,
                                 verify_certificate, verify_chain, verify_condition_report)
from breadthkit.oracle import ExplicitOracle, builtin, tri_level
from breadthkit.setsys import GroundWindow, Member, SetSystem, join, union_closure

F = Member.finite


@pytest.fixture(scope="module")
def fin_cert():
    r = detect_type(builtin("FIN"), "max", 3)
    assert r.certificate is not None
    return r.certificate


# -- detection -----------------------------------------------------------------------

def test_fin_max_has_singleton_first_level(fin_cert):
    assert verify_certificate(fin_cert, builtin("FIN"))
    assert fin_cert.spread.sizes == (1, 2, 3)
    for p in bits_of(fin_cert.spread.block(1)):
        assert fin_cert.realization[(1, 1 << p)].support == (p,)


@pytest.mark.parametrize("tag,type_tag", [("TMAX", "max"), ("TMIN", "min"), ("TORT", "ort")])
@pytest.mark.parametrize("depth", [3, 4])
def test_self_recognition(tag, type_tag, depth):
    o = builtin(tag)
    r = detect_type(o, type_tag, depth)
    assert r.certificate is not None and not r.budget_exhausted
    assert verify_certificate(r.certificate, o)
    # the recovered blocks sit inside blocks of the canonical spread
    assert refines(r.certificate.spread, spread_standard(depth + 1))


def test_blocks_max_uses_transversals():
    o = builtin("BLOCKS")
    cert = detect_type(o, "max", 3).certificate
    assert cert is not None and verify_certificate(cert, o)
    for b in cert.spread.blocks:
        levels = [tri_level(p) for p in bits_of(b)]
        assert len(set(levels)) == len(levels)


def test_detect_any_keeps_every_hit():
    results = {r.type_tag: r for r in detect_any(builtin("FINCOFIN"), 2)}
    assert results["max"].certificate is not None
    assert results["min"].certificate is not None


def test_chain_has_no_certificate_and_says_so():
    o = builtin("CHAIN")
    r = detect_type(o, "max", 2, window=12, count=12)
    assert r.certificate is None and r.horizon_exhaustive


def test_detect_validates_arguments():
    with pytest.raises(ValueError):
        detect_type(builtin("FIN"), "max", 0)
    with pytest.raises(ValueError):
        detect_type(builtin("FIN"), "big", 2)


def test_budget_exhaustion_is_reported():
    r = detect_type(builtin("TORT"), "ort", 4, budget=10)
    assert r.certificate is None and r.budget_exhausted and not r.horizon_exhaustive


@settings(max_examples=30)
@given(st.lists(st.integers(1, 255), min_size=2, max_size=5),
       st.sampled_from(["max", "min", "ort"]))
def test_any_returned_certificate_verifies(gens, type_tag):
    system = SetSystem.build(GroundWindow(8), union_closure([F(points_of(g)) for g in gens]))
    r = detect_type(system, type_tag, 2, budget=20_000)
    if r.certificate is not None:
        assert certificate_problems(r.certificate, system) == []


# -- the two-representation example -----------------------------------------------------------

def test_ex5_ort_is_budget_limited_at_depth_three():
    r = detect_type(builtin("EX5_S"), "ort", 3)
    assert r.certificate is None
    assert r.budget_exhausted and not r.horizon_exhaustive


def test_ex5_separations_are_asymptotic():
    # the obstructions concern infinite spreads; finite prefixes still admit
    # the forbidden types, and what is found verifies
    s, sp = builtin("EX5_S"), builtin("EX5_SPRIME")
    r = detect_type(s, "ort", 2)
    assert r.certificate is not None and verify_certificate(r.certificate, s)
    r = detect_type(sp, "min", 3)
    assert r.certificate is not None and verify_certificate(r.certificate, sp)


def test_ex5_each_presentation_shows_its_type():
    s, sp = builtin("EX5_S"), builtin("EX5_SPRIME")
    assert verify_certificate(detect_type(s, "min", 3).certificate, s)
    assert verify_certificate(detect_type(sp, "ort", 3).certificate, sp)


# -- verification -------------------------------------------------------------------------

def test_swapped_handles_fail(fin_cert):
    real = dict(fin_cert.realization)
    a, b = bits_of(fin_cert.spread.block(2))
    real[(2, 1 << a)], real[(2, 1 << b)] = real[(2, 1 << b)], real[(2, 1 << a)]
    bad = TypeCertificate("max", fin_cert.spread, real)
    assert not verify_certificate(bad, builtin("FIN"))


def test_overlapping_blocks_fail(fin_cert):
    blocks = list(fin_cert.spread.blocks)
    blocks[1] |= blocks[0]
    with pytest.raises(ValueError):
        Spread(tuple(blocks))
    # the verifier checks disjointness on its own, for spreads built unchecked
    spread = object.__new__(Spread)
    object.__setattr__(spread, "blocks", tuple(blocks))
    bad = TypeCertificate("max", spread, fin_cert.realization)
    problems = certificate_problems(bad, builtin("FIN"))
    assert any("meets an earlier block" in p for p in problems)


def test_missing_key_and_wrong_type_fail(fin_cert):
    real = dict(fin_cert.realization)
    real.pop(next(iter(real)))
    assert not verify_certificate(TypeCertificate("max", fin_cert.spread, real), builtin("FIN"))
    assert not verify_certificate(TypeCertificate("min", fin_cert.spread, fin_cert.realization),
                                  builtin("FIN"))


# -- conditions --------------------------------------------------------------------------------

def test_condition_a_on_fin():
    r = condition_probe(builtin("FIN"), "A", 3)
    assert r.satisfied and verify_condition_report(r)
    assert len(r.evidence["family"]) == 3


def test_condition_a_refuted_on_tmin_prefix():
    tmin3 = canonical_family("min", spread_standard(3))
    r = condition_probe(tmin3, "A", 3, k_thick=3)
    assert r.outcome == "refuted" and r.exhaustive
    # with the default thickness requirement the prefix is too thin to test
    assert condition_probe(tmin3, "A", 3).outcome == "precondition-failed"


def test_condition_b_on_tmin():
    r = condition_probe(builtin("TMIN"), "B", 3)
    assert r.satisfied and verify_condition_report(r)
    levels = {tri_level(p) for p in r.evidence["witness"]}
    assert len(levels) == 1


def test_tampered_condition_evidence_fails():
    r = condition_probe(builtin("FIN"), "A", 3)
    r.evidence["witness"] = list(reversed(r.evidence["witness"]))
    assert not verify_condition_report(r)


def test_condition_rejects_unknown_name():
    with pytest.raises(ValueError):
        condition_probe(builtin("FIN"), "C", 2)


# -- chains -------------------------------------------------------------------------------------

def test_chain_of_fourteen_singletons():
    fin = builtin("FIN")
    chain = [F([i]) for i in range(14)]
    cert = chain_to_tmax(chain, fin, 3)
    assert cert.spread.sizes == (1, 4, 9)
    assert verify_certificate(cert, fin)


def test_chain_of_length_one():
    cert = chain_to_tmax([F([5])], builtin("FIN"), 1)
    assert cert.spread.block_lists() == [[5]]


def test_compressible_chain_refused():
    fin = builtin("FIN")
    with pytest.raises(ValueError):
        chain_certificate([F([0]), F([1]), F([0, 1])], fin)
    with pytest.raises(ValueError, match="compressible"):
        chain_to_tmax([F([0]), F([0])] + [F([i]) for i in range(1, 6)], fin, 2)
    with pytest.raises(ValueError, match="too short"):
        chain_to_tmax([F([i]) for i in range(4)], fin, 3)


@settings(max_examples=25)
@given(st.lists(st.integers(0, 40), min_size=14, max_size=20, unique=True))
def test_chain_blocks_lie_between_cuts(points):
    fin = builtin("FIN")
    chain = [F([p]) for p in points]
    cc = chain_certificate(chain, fin)
    assert verify_chain(cc, fin)
    cert = chain_to_tmax(cc, fin, 3)
    cuts = [0, 1, 5, 14]
    for j, b in enumerate(cert.spread.blocks, start=1):
        d_hi = join(chain[:cuts[j]])
        d_lo = join(chain[:cuts[j - 1]]) if cuts[j - 1] else F([])
        assert set(bits_of(b)) <= set(d_hi.support) - set(d_lo.support)
        assert b.bit_count() == cuts[j] - cuts[j - 1]


def test_chain_certificate_tamper():
    fin = builtin("FIN")
    cc = chain_certificate([F([0]), F([1])], fin)
    bad = ChainCertificate(cc.handles, [cc.witnesses[0], (1, 0)])
    assert not verify_chain(bad, fin)


# -- transfer -----------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def free6():
    sys6 = free_semilattice(6)
    src = ExplicitOracle(sys6)
    cay = cayley_embed(table_of_system(sys6))
    return sys6, src, ExplicitOracle(cay), dict(zip(sys6.members, cay.members))


def test_transfer_to_cayley(free6):
    sys6, src, tgt, corr = free6
    cert = detect_type(src, "max", 3).certificate
    spread, new = transfer_spread(cert, src, tgt, corr)
    assert spread.sizes == (1, 2, 3)
    assert verify_certificate(new, tgt)


def test_self_transfer(fin_cert):
    fin = builtin("FIN")
    spread, new = transfer_spread(fin_cert, fin, fin, lambda h: h)
    assert verify_certificate(new, fin) and spread.sizes == fin_cert.spread.sizes


def test_transfer_rejects_min_certificate():
    o = builtin("TMIN")
    cert = detect_type(o, "min", 2).certificate
    with pytest.raises(ValueError):
        transfer_spread(cert, o, o, lambda h: h)


def test_transfer_detects_broken_correspondence(free6):
    sys6, src, tgt, corr = free6
    cert = detect_type(src, "max", 3).certificate
    members = list(corr.values())
    shifted = {k: members[(i + 1) % len(members)] for i, k in enumerate(corr)}
    with pytest.raises(CorrespondenceError):
        transfer_spread(cert, src, tgt, shifted)
