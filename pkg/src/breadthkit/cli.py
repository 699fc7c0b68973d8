"""Command-line front end.  Every command prints one JSON run report.

Exit codes: 0 definite positive, 1 definite negative (or exhaustive
absence), 2 inconclusive within budget, 64 usage, 65 malformed input.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import canonical as C
from .bits import mask_of, points_of
from .classify import (DEFAULT_BUDGET, detect_type, transfer_spread, verify_certificate)
from .oracle import BUILTIN_TAGS, ExplicitOracle, builtin, oracle_from_spec, snapshot
from .ramsey import (Colouring, dichotomy_search, realize_finite_semilattice, shatter_check,
                     ShatterCertificate, verify_decisive_report, verify_shatter)
from .serialize import (PayloadError, family_certificate_to_json, realization_to_json,
                        type_certificate_to_json, verify_payload)
from .setsys import (Budget, BudgetExceeded, GroundWindow, Member, SetSystem, breadth_at_least,
                     dominated_index, find_witness, max_incompressible, union_closure)

EXIT = {"positive": 0, "negative": 1, "inconclusive": 2}
EXIT_USAGE = 64
EXIT_DATA = 65


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunReport:
    command: str
    params: dict
    outcome: str
    payload: Any = None
    stats: dict = field(default_factory=dict)
    exhaustive: bool | None = None
    wall_time: float = 0.0

    def to_json(self) -> dict:
        return {"command": self.command, "params": self.params, "outcome": self.outcome,
                "payload": self.payload, "stats": self.stats, "exhaustive": self.exhaustive,
                "wall_time": round(self.wall_time, 6)}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# input helpers


def read_json(path: str) -> Any:
    text = sys.stdin.read() if path == "-" else _read_text(path)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    # accept a run report wherever its payload is expected
    if isinstance(obj, dict) and "command" in obj and "payload" in obj:
        return obj["payload"]
    return obj


def _read_text(path):
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def load_system(path: str) -> SetSystem:
    obj = read_json(path)
    try:
        return SetSystem.from_json(obj)
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{path}: not a set system ({e})") from None


def load_family(spec: str):
    """A built-in tag or a set-system file."""
    if spec.upper() in BUILTIN_TAGS:
        return None, spec.upper()
    return ExplicitOracle(load_system(spec)), None


def family_oracle(spec: str, profile: str):
    oracle, tag = load_family(spec)
    return oracle if oracle is not None else builtin(tag, profile)


def parse_spread(spec: str) -> C.Spread:
    if ":" in spec and spec.split(":", 1)[0] in C.PROFILES:
        name, k = spec.split(":", 1)
        try:
            return C.spread_standard(int(k), name)
        except ValueError as e:
            raise UsageError(f"bad spread {spec!r}: {e}") from None
    obj = json.loads(spec) if spec.lstrip().startswith("[") else read_json(spec)
    try:
        return C.Spread.from_json(obj)
    except (TypeError, ValueError) as e:
        raise DataError(f"bad spread: {e}") from None


def parse_member_list(obj, path) -> list[Member]:
    if isinstance(obj, dict) and "family" in obj:
        obj = obj["family"]
    if isinstance(obj, dict) and "members" in obj:
        obj = obj["members"]
    if not isinstance(obj, list):
        raise DataError(f"{path}: expected a list of members")
    try:
        return [Member.from_json(m) for m in obj]
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{path}: bad member ({e})") from None


# ---------------------------------------------------------------------------
# commands


def cmd_gen(a) -> RunReport:
    params = {"kind": a.kind}
    if a.kind == "free":
        system = C.free_semilattice(a.n)
        params["n"] = a.n
    elif a.kind == "chain":
        system = C.chain_system(a.n)
        params["n"] = a.n
    elif a.kind == "canonical":
        spread = C.spread_standard(a.levels, a.profile)
        system = C.canonical_family(a.type, spread, a.unbounded)
        params.update(type=a.type, levels=a.levels, profile=a.profile, unbounded=a.unbounded,
                      merges=C.merge_count(a.type, spread, a.unbounded))
    elif a.kind == "cayley":
        rows = read_json(a.table)
        try:
            system = C.cayley_embed(C.AbstractSemilattice.from_rows(rows))
        except (TypeError, ValueError) as e:
            raise DataError(f"{a.table}: {e}") from None
        params["table"] = a.table
    elif a.kind == "tree":
        system = C.cayley_embed(C.binary_tree_semilattice(a.n))
        params["depth"] = a.n
    else:  # random
        rng = random.Random(a.seed)
        gens = [Member(False, rng.randrange(1, 1 << a.n)) for _ in range(a.members)]
        system = SetSystem.build(GroundWindow(a.n), union_closure(gens), closed=True)
        params.update(n=a.n, generators=a.members, seed=a.seed)
    return RunReport("gen", params, "positive", system.to_json())


def cmd_breadth(a) -> RunReport:
    system = load_system(a.system)
    budget = Budget(a.budget)
    if a.at_least is not None:
        r = breadth_at_least(system, a.at_least, budget)
        outcome = "positive" if r.found else ("inconclusive" if r.budget_exhausted else "negative")
        payload = {"k": a.at_least, "found": r.found,
                   "family": [m.to_json() for m in r.family] if r.found else None,
                   "witness": list(r.witness) if r.found else None}
        return RunReport("breadth", {"system": a.system, "at_least": a.at_least, "budget": a.budget},
                         outcome, payload, {"nodes": r.nodes}, r.exhaustive)
    try:
        fam = list(max_incompressible(system, budget))
    except BudgetExceeded as e:
        return RunReport("breadth", {"system": a.system, "budget": a.budget}, "inconclusive",
                         {"reason": "budget exhausted"}, {"nodes": e.used}, False)
    payload = {"breadth": len(fam), "family": [m.to_json() for m in fam],
               "witness": list(find_witness(fam) or ())}
    return RunReport("breadth", {"system": a.system, "budget": a.budget}, "positive",
                     payload, {"nodes": budget.used}, True)


def cmd_witness(a) -> RunReport:
    fam = parse_member_list(read_json(a.family), a.family)
    w = find_witness(fam)
    if w is None:
        return RunReport("witness", {"family": a.family}, "negative",
                         {"compressible": True, "dominated_index": dominated_index(fam)},
                         exhaustive=True)
    return RunReport("witness", {"family": a.family}, "positive",
                     family_certificate_to_json(fam, w), exhaustive=True)


def cmd_classify(a) -> RunReport:
    oracle = family_oracle(a.family, a.profile)
    types = C.TYPE_TAGS if a.type == "any" else (a.type,)
    budget = Budget(a.budget)
    results = []
    for t in types:
        r = detect_type(oracle, t, a.depth, budget, a.window, a.count, a.part)
        results.append(r)
    hits = [r for r in results if r.certificate is not None]
    params = {"family": a.family, "type": a.type, "depth": a.depth, "budget": a.budget,
              "profile": a.profile, "window": results[0].window, "count": results[0].count,
              "part": a.part}
    stats = {r.type_tag: {"nodes": r.nodes, "budget_exhausted": r.budget_exhausted,
                          "horizon_exhaustive": r.horizon_exhaustive} for r in results}
    if hits:
        for r in hits:
            assert verify_certificate(r.certificate, oracle)
        payload = (type_certificate_to_json(hits[0].certificate, oracle) if a.type != "any"
                   else {"certificates": [type_certificate_to_json(r.certificate, oracle)
                                          for r in hits]})
        return RunReport("classify", params, "positive", payload, stats, None)
    inconclusive = any(r.budget_exhausted for r in results)
    return RunReport("classify", params, "inconclusive" if inconclusive else "negative",
                     {"found": []}, stats, not inconclusive)


def _correspondence(path, src, tgt):
    if path == "identity":
        return lambda h: h
    obj = read_json(path)
    if not isinstance(obj, list):
        raise DataError(f"{path}: expected a list of pairs")
    table = {}
    for i, pair in enumerate(obj):
        if not isinstance(pair, list) or len(pair) != 2:
            raise DataError(f"{path}: entry {i} is not a pair")
        x, y = pair
        if isinstance(x, int) and isinstance(y, int):
            if not (isinstance(src, ExplicitOracle) and isinstance(tgt, ExplicitOracle)):
                raise UsageError("index pairs need two explicit systems")
            table[src.system.members[x]] = tgt.system.members[y]
        else:
            table[src.handle_from_json(x)] = tgt.handle_from_json(y)
    return table


def cmd_transfer(a) -> RunReport:
    src = family_oracle(a.source, a.profile)
    tgt = family_oracle(a.target, a.profile)
    corr = _correspondence(a.correspondence, src, tgt)
    budget = Budget(a.budget)
    r = detect_type(src, "max", a.depth, budget)
    params = {"source": a.source, "target": a.target, "correspondence": a.correspondence,
              "depth": a.depth, "budget": a.budget}
    if r.certificate is None:
        return RunReport("transfer", params, "inconclusive" if r.budget_exhausted else "negative",
                         {"reason": "no max-certificate in the source"}, {"nodes": r.nodes})
    try:
        spread, cert = transfer_spread(r.certificate, src, tgt, corr)
    except KeyError as e:
        raise DataError(f"{a.correspondence}: no image for {e}") from None
    return RunReport("transfer", params, "positive",
                     {"spread": spread.to_json(),
                      "source_certificate": type_certificate_to_json(r.certificate, src),
                      "certificate": type_certificate_to_json(cert, tgt)},
                     {"nodes": r.nodes})


def cmd_snapshot(a) -> RunReport:
    oracle = family_oracle(a.family, a.profile)
    system = snapshot(oracle, a.window, a.count)
    return RunReport("snapshot", {"family": a.family, "window": a.window, "count": a.count},
                     "positive", system.to_json())


def cmd_dichotomy(a) -> RunReport:
    oracle = family_oracle(a.family, a.profile)
    spread = parse_spread(a.spread)
    out = dichotomy_search(oracle, spread, a.depth, a.threshold, a.tail, a.count, Budget(a.budget))
    params = {"family": a.family, "spread": spread.to_json(), "depth": a.depth,
              "threshold": a.threshold, "tail": a.tail, "count": a.count, "budget": a.budget}
    rounds = [{"member": points_of(r.y), "levels": r.levels} for r in out.rounds]
    if out.kind == "shatter":
        assert verify_shatter(out.shatter)
        return RunReport("dichotomy", params, "positive",
                         {"result": "shatter", "certificate": out.shatter.to_json(),
                          "rounds": rounds})
    if out.kind == "decisive":
        assert verify_decisive_report(out.report)
        return RunReport("dichotomy", params, "positive",
                         {"result": "decisive", "report": out.report.to_json(), "rounds": rounds})
    return RunReport("dichotomy", params, "inconclusive", {"result": "inconclusive",
                                                           "note": out.note, "rounds": rounds})


def cmd_shatter(a) -> RunReport:
    members = parse_member_list(read_json(a.members), a.members)
    spread = parse_spread(a.spread)
    res = shatter_check([m.trace(spread.join) for m in members], spread, a.threshold, a.onset)
    params = {"members": a.members, "spread": spread.to_json(), "threshold": a.threshold,
              "onset": a.onset}
    if isinstance(res, ShatterCertificate):
        return RunReport("shatter", params, "positive", res.to_json(), exhaustive=True)
    return RunReport("shatter", params, "negative",
                     {"pattern": list(res.pattern), "level": res.level, "count": res.count},
                     exhaustive=True)


def cmd_realize(a) -> RunReport:
    obj = read_json(a.certificate)
    if isinstance(obj, dict) and obj.get("kind") != "shatter_certificate" and "certificate" in obj:
        obj = obj["certificate"]
    try:
        cert = ShatterCertificate.from_json(obj)
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{a.certificate}: not a shatter certificate ({e})") from None
    tobj = read_json(a.target)
    if isinstance(tobj, dict):
        targets, k = tobj.get("members"), tobj.get("k")
    else:
        targets, k = tobj, None
    if not isinstance(targets, list) or not all(isinstance(c, list) for c in targets):
        raise DataError(f"{a.target}: expected a list of point lists")
    k = k if k is not None else 1 + max((p for c in targets for p in c), default=-1)
    r = realize_finite_semilattice(cert, targets, int(k))
    return RunReport("realize", {"certificate": a.certificate, "target": a.target, "k": k},
                     "positive", realization_to_json(r, cert), exhaustive=True)


def cmd_verify(a) -> RunReport:
    obj = read_json(a.payload)
    ok, reasons = verify_payload(obj)
    return RunReport("verify", {"payload": a.payload, "kind": obj.get("kind")},
                     "positive" if ok else "negative", {"valid": ok, "reasons": reasons},
                     exhaustive=True)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="breadthkit", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0, help="seed for randomized generation")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="emit a set system")
    g.add_argument("kind", choices=["free", "chain", "canonical", "cayley", "tree", "random"])
    g.add_argument("n", type=int, nargs="?", default=3)
    g.add_argument("--type", choices=C.TYPE_TAGS, default="max")
    g.add_argument("--levels", type=int, default=3)
    g.add_argument("--profile", choices=sorted(C.PROFILES), default="linear")
    g.add_argument("--unbounded", action="store_true")
    g.add_argument("--table")
    g.add_argument("--members", type=int, default=4)
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("breadth", help="exact breadth of an explicit system")
    b.add_argument("system")
    b.add_argument("--at-least", type=int)
    b.add_argument("--budget", type=int, default=None)
    b.set_defaults(func=cmd_breadth)

    w = sub.add_parser("witness", help="private points of a family")
    w.add_argument("family")
    w.set_defaults(func=cmd_witness)

    c = sub.add_parser("classify", help="search for a level-type certificate")
    c.add_argument("--family", required=True)
    c.add_argument("--type", choices=C.TYPE_TAGS + ("any",), default="any")
    c.add_argument("--depth", type=int, default=3)
    c.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    c.add_argument("--profile", choices=sorted(C.PROFILES), default="linear")
    c.add_argument("--window", type=int)
    c.add_argument("--count", type=int)
    c.add_argument("--part", type=int, default=1)
    c.set_defaults(func=cmd_classify)

    t = sub.add_parser("transfer", help="carry a max-certificate to another presentation")
    t.add_argument("--source", required=True)
    t.add_argument("--target", required=True)
    t.add_argument("--correspondence", required=True,
                   help="JSON list of [source, target] pairs, or 'identity'")
    t.add_argument("--depth", type=int, default=3)
    t.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    t.add_argument("--profile", choices=sorted(C.PROFILES), default="linear")
    t.set_defaults(func=cmd_transfer)

    s = sub.add_parser("snapshot", help="windowed explicit system of a built-in family")
    s.add_argument("--family", required=True)
    s.add_argument("--window", type=int, required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--profile", choices=sorted(C.PROFILES), default="linear")
    s.set_defaults(func=cmd_snapshot)

    d = sub.add_parser("dichotomy", help="shattering family or decisive colouring")
    d.add_argument("--family", required=True)
    d.add_argument("--spread", default="linear:8")
    d.add_argument("--depth", type=int, default=2)
    d.add_argument("--threshold", type=int, default=1)
    d.add_argument("--tail", type=int, default=3)
    d.add_argument("--count", type=int)
    d.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    d.add_argument("--profile", choices=sorted(C.PROFILES), default="linear")
    d.set_defaults(func=cmd_dichotomy)

    h = sub.add_parser("shatter", help="check that members shatter a spread")
    h.add_argument("--members", required=True)
    h.add_argument("--spread", required=True)
    h.add_argument("--threshold", type=int, default=1)
    h.add_argument("--onset", type=int, default=1)
    h.set_defaults(func=cmd_shatter)

    r = sub.add_parser("realize", help="realize a finite target from a shatter certificate")
    r.add_argument("--certificate", required=True)
    r.add_argument("--target", required=True)
    r.set_defaults(func=cmd_realize)

    v = sub.add_parser("verify", help="re-check any emitted payload")
    v.add_argument("payload")
    v.set_defaults(func=cmd_verify)
    return p


def dispatch(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    start = time.perf_counter()
    argv = list(sys.argv[1:] if argv is None else argv)
    command = next((x for x in argv if not x.startswith("-")), "")
    try:
        args = build_parser().parse_args(argv)
        report = args.func(args)
        code = EXIT[report.outcome]
    except UsageError as e:
        report, code = RunReport(command, {"argv": argv}, "usage-error", {"error": str(e)}), EXIT_USAGE
    except (DataError, PayloadError) as e:
        report, code = RunReport(command, {"argv": argv}, "data-error", {"error": str(e)}), EXIT_DATA
    except ValueError as e:
        report, code = RunReport(command, {"argv": argv}, "usage-error", {"error": str(e)}), EXIT_USAGE
    report.wall_time = time.perf_counter() - start
    json.dump(report.to_json(), out, indent=1)
    out.write("\n")
    return code


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
