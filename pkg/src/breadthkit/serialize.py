"""JSON forms for every payload kind and a verifier dispatch on raw data."""

from __future__ import annotations

from typing import Any

from .bits import mask_of, points_of
from .canonical import Spread
from .classify import (ChainCertificate, ConditionReport, TypeCertificate,
                       certificate_problems, verify_chain)
from .oracle import OracleSystem, oracle_from_spec
from .ramsey import (Colouring, DecisiveReport, Realization, SampleEntry, ShatterCertificate,
                     verify_decisive_report, verify_shatter)
from .setsys import Member, find_witness, verify_witness


class PayloadError(ValueError):
    """A payload is structurally malformed; `path` locates the problem."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


def _get(obj, key, path):
    if not isinstance(obj, dict):
        raise PayloadError("expected an object", path)
    if key not in obj:
        raise PayloadError(f"missing key {key!r}", path)
    return obj[key]


def type_certificate_to_json(cert: TypeCertificate, oracle: OracleSystem) -> dict:
    rows = [{"level": n, "inner": points_of(a), "handle": oracle.handle_to_json(h)}
            for (n, a), h in sorted(cert.realization.items())]
    return {"kind": "type_certificate", "type": cert.type_tag, "depth": cert.depth,
            "family": oracle.spec(), "spread": cert.spread.to_json(), "realization": rows}


def type_certificate_from_json(obj) -> tuple[TypeCertificate, OracleSystem]:
    oracle = oracle_from_spec(_get(obj, "family", "$"))
    spread = Spread(tuple(mask_of(b) for b in _get(obj, "spread", "$")))
    real = {}
    for i, row in enumerate(_get(obj, "realization", "$")):
        path = f"$.realization[{i}]"
        key = (int(_get(row, "level", path)), mask_of(_get(row, "inner", path)))
        real[key] = oracle.handle_from_json(_get(row, "handle", path))
    return TypeCertificate(_get(obj, "type", "$"), spread, real), oracle


def family_certificate_to_json(family, witness) -> dict:
    return {"kind": "family_certificate", "family": [m.to_json() for m in family],
            "witness": list(witness) if witness is not None else None}


def chain_certificate_to_json(chain: ChainCertificate, oracle: OracleSystem) -> dict:
    return {"kind": "chain_certificate", "family": oracle.spec(),
            "chain": [oracle.handle_to_json(h) for h in chain.handles],
            "witnesses": [list(w) for w in chain.witnesses]}


def condition_report_to_json(r: ConditionReport) -> dict:
    ev = {k: v for k, v in r.evidence.items() if k != "handles"}
    return {"kind": "condition_report", "condition": r.condition, "k": r.k,
            "k_thick": r.k_thick, "params": r.params, "outcome": r.outcome,
            "evidence": ev, "nodes": r.nodes, "exhaustive": r.exhaustive,
            "budget_exhausted": r.budget_exhausted}


def decisive_report_from_json(obj) -> DecisiveReport:
    col = Colouring(tuple(mask_of(c) for c in _get(obj, "colouring", "$")))
    entries = [SampleEntry(str(e.get("member", "")), mask_of(_get(e, "trace", f"$.table[{i}]")),
                           int(_get(e, "value", f"$.table[{i}]")))
               for i, e in enumerate(_get(obj, "table", "$"))]
    return DecisiveReport(col, int(_get(obj, "decisive_class", "$")),
                          Spread.from_json(_get(obj, "spread", "$")), entries,
                          obj.get("sample", ""))


def realization_to_json(r: Realization, cert: ShatterCertificate) -> dict:
    return {"kind": "realization", "points": r.points,
            "targets": [sorted(c) for c in r.targets],
            "adjoined": [sorted(c) for c in r.adjoined], "level": r.level,
            "table": r.table, "certificate": cert.to_json()}


def verify_payload(obj: Any) -> tuple[bool, list[str]]:
    """Re-run the matching verifier from the raw payload."""
    kind = _get(obj, "kind", "$")
    try:
        if kind == "type_certificate":
            cert, oracle = type_certificate_from_json(obj)
            problems = certificate_problems(cert, oracle)
            return not problems, problems
        if kind == "family_certificate":
            fam = [Member.from_json(m) for m in _get(obj, "family", "$")]
            wit = obj.get("witness")
            if wit is None:
                ok = find_witness(fam) is None
                return ok, [] if ok else ["family is incompressible but no witness given"]
            ok = verify_witness(fam, wit)
            return ok, [] if ok else ["witness points are not private"]
        if kind == "chain_certificate":
            oracle = oracle_from_spec(_get(obj, "family", "$"))
            chain = ChainCertificate([oracle.handle_from_json(h) for h in obj["chain"]],
                                     [tuple(w) for w in obj["witnesses"]])
            ok = verify_chain(chain, oracle)
            return ok, [] if ok else ["a chain prefix witness fails"]
        if kind == "shatter_certificate":
            ok = verify_shatter(ShatterCertificate.from_json(obj))
            return ok, [] if ok else ["pattern table does not recount or falls below t"]
        if kind == "decisive_report":
            ok = verify_decisive_report(decisive_report_from_json(obj))
            return ok, [] if ok else ["a table entry does not recompute"]
        if kind == "realization":
            cert = ShatterCertificate.from_json(_get(obj, "certificate", "$"))
            problems = []
            if not verify_shatter(cert):
                problems.append("embedded shatter certificate fails")
            targets = [set(c) for c in obj["targets"]]
            for j, g in enumerate(obj["points"]):
                row = [(cert.members[n] >> g) & 1 for n in range(len(targets))]
                if row != [int(j in c) for c in targets]:
                    problems.append(f"point {g} has membership {row}")
            if len(set(obj["points"])) != len(obj["points"]):
                problems.append("points are not distinct")
            return not problems, problems
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, PayloadError):
            raise
        return False, [f"{type(e).__name__}: {e}"]
    raise PayloadError(f"unknown payload kind {kind!r}", "$.kind")
