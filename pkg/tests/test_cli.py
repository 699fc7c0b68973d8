import io
import json
import subprocess
import sys

import pytest

from breadthkit.canonical import free_semilattice, spread_standard
from breadthkit.classify import chain_certificate, detect_type
from breadthkit.cli import dispatch
from breadthkit.oracle import builtin
from breadthkit.serialize import (PayloadError, chain_certificate_to_json,
                                  decisive_report_from_json, type_certificate_from_json,
                                  type_certificate_to_json, verify_payload)
from breadthkit.setsys import Member


def run(*argv):
    out = io.StringIO()
    code = dispatch([str(a) for a in argv], out)
    return code, json.loads(out.getvalue())


def dump(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


@pytest.fixture
def free3(tmp_path):
    return dump(tmp_path, "free3.json", free_semilattice(3).to_json())


# -- analysis commands ------------------------------------------------------------------

def test_breadth_of_free_semilattice(free3):
    code, rep = run("breadth", free3)
    assert code == 0 and rep["payload"]["breadth"] == 3
    assert rep["exhaustive"] is True and rep["command"] == "breadth"


def test_breadth_at_least(free3):
    assert run("breadth", free3, "--at-least", 3)[0] == 0
    code, rep = run("breadth", free3, "--at-least", 4)
    assert code == 1 and rep["exhaustive"]


def test_breadth_budget_is_inconclusive(tmp_path):
    p = dump(tmp_path, "free6.json", free_semilattice(6).to_json())
    code, rep = run("breadth", p, "--budget", 5)
    assert code == 2 and rep["exhaustive"] is False


def test_witness_on_compressible_family(tmp_path):
    fam = [Member.finite(s).to_json() for s in ([1], [2], [1, 2])]
    code, rep = run("witness", dump(tmp_path, "fam.json", fam))
    assert code == 1 and rep["payload"]["dominated_index"] == 0


def test_witness_round_trips_through_verify(tmp_path):
    fam = [Member.finite(s).to_json() for s in ([1, 2], [2, 3])]
    code, rep = run("witness", dump(tmp_path, "fam.json", fam))
    assert code == 0
    report = dump(tmp_path, "w.json", rep)
    assert run("verify", report)[0] == 0
    rep["payload"]["witness"] = [2, 3]
    code, out = run("verify", dump(tmp_path, "bad.json", rep))
    assert code == 1 and out["payload"]["reasons"]


# -- generation and snapshots ---------------------------------------------------------------

@pytest.mark.parametrize("argv,size", [(["free", 3], 7), (["chain", 4], 4), (["tree", 2], 7),
                                       (["canonical", "--levels", 2, "--type", "min"], 4)])
def test_gen_kinds(argv, size):
    code, rep = run("gen", *argv)
    assert code == 0 and len(rep["payload"]["members"]) == size


def test_gen_random_is_seeded():
    a = run("--seed", 5, "gen", "random", 6)[1]["payload"]
    b = run("--seed", 5, "gen", "random", 6)[1]["payload"]
    assert a == b


def test_gen_cayley_from_table(tmp_path):
    table = dump(tmp_path, "t.json", [[0, 0], [0, 1]])
    code, rep = run("gen", "cayley", "--table", table)
    assert code == 0 and len(rep["payload"]["members"]) == 2
    bad = dump(tmp_path, "bad.json", [[0, 1], [0, 1]])
    assert run("gen", "cayley", "--table", bad)[0] == 65


def test_snapshot_command():
    code, rep = run("snapshot", "--family", "FIN", "--window", 4, "--count", 100)
    assert code == 0 and rep["payload"]["closed"]
    assert len(rep["payload"]["members"]) == 16


# -- classification and transfer -----------------------------------------------------------------

def test_classify_positive_and_verify(tmp_path):
    code, rep = run("classify", "--family", "TMIN", "--type", "min", "--depth", 3)
    assert code == 0 and rep["payload"]["kind"] == "type_certificate"
    assert run("verify", dump(tmp_path, "c.json", rep))[0] == 0


def test_classify_negative_on_chain(tmp_path):
    chain = dump(tmp_path, "chain.json", run("gen", "chain", 6)[1]["payload"])
    code, rep = run("classify", "--family", chain, "--type", "max", "--depth", 2)
    assert code == 1 and rep["exhaustive"] is True


def test_classify_cofin_has_max_at_horizon():
    # traces of cofinite sets on a window are all of its subsets
    assert run("classify", "--family", "COFIN", "--type", "max", "--depth", 3)[0] == 0


def test_classify_budget_is_inconclusive():
    code, rep = run("classify", "--family", "TORT", "--type", "ort", "--depth", 4, "--budget", 10)
    assert code == 2 and rep["stats"]["ort"]["budget_exhausted"]


def test_classify_any_lists_every_hit():
    code, rep = run("classify", "--family", "FINCOFIN", "--depth", 2)
    kinds = {c["type"] for c in rep["payload"]["certificates"]}
    assert code == 0 and {"max", "min"} <= kinds


def test_transfer_identity():
    code, rep = run("transfer", "--source", "FIN", "--target", "FIN", "--correspondence",
                    "identity", "--depth", 2)
    assert code == 0
    ok, _ = verify_payload(rep["payload"]["certificate"])
    assert ok


def test_transfer_by_index_pairs(tmp_path, free3):
    pairs = dump(tmp_path, "pairs.json", [[i, i] for i in range(7)])
    code, rep = run("transfer", "--source", free3, "--target", free3, "--correspondence", pairs,
                    "--depth", 2)
    assert code == 0


# -- dichotomy, shattering, realization ------------------------------------------------------------

def test_dichotomy_powerset_shatters(tmp_path):
    code, rep = run("dichotomy", "--family", "POWERSET", "--spread", "linear:8", "--depth", 2)
    assert code == 0 and rep["payload"]["result"] == "shatter"
    cert = dump(tmp_path, "s.json", rep["payload"]["certificate"])
    assert run("verify", cert)[0] == 0


def test_dichotomy_fin_report_and_tamper(tmp_path):
    code, rep = run("dichotomy", "--family", "FIN", "--spread", "linear:8")
    assert code == 0 and rep["payload"]["result"] == "decisive"
    report = rep["payload"]["report"]
    assert run("verify", dump(tmp_path, "r.json", report))[0] == 0
    report["table"][3]["value"] += 1
    code, out = run("verify", dump(tmp_path, "r2.json", report))
    assert code == 1 and not out["payload"]["valid"]


def test_shatter_and_realize(tmp_path):
    members = [{"kind": "finite", "support": [p for p in range(32) if p >> j & 1]}
               for j in range(3)]
    spread = json.dumps([list(range(8 * i, 8 * i + 8)) for i in range(4)])
    code, rep = run("shatter", "--members", dump(tmp_path, "m.json", members), "--spread", spread)
    assert code == 0
    cert = dump(tmp_path, "cert.json", rep)
    target = dump(tmp_path, "target.json", {"members": [[0], [0, 1], [0, 1, 2]], "k": 3})
    code, real = run("realize", "--certificate", cert, "--target", target)
    assert code == 0 and real["payload"]["table"] == [[1, 1, 1], [0, 1, 1], [0, 0, 1]]
    assert run("verify", dump(tmp_path, "real.json", real))[0] == 0
    real["payload"]["points"][0] = real["payload"]["points"][1]
    assert run("verify", dump(tmp_path, "bad.json", real))[0] == 1


def test_shatter_negative(tmp_path):
    same = [{"kind": "finite", "support": [0, 2, 4, 6]}] * 2
    code, rep = run("shatter", "--members", dump(tmp_path, "m.json", same), "--spread", "linear:3")
    assert code == 1 and rep["payload"]["count"] == 0


# -- payload kinds without a dedicated command ---------------------------------------------------

def test_chain_certificate_round_trip():
    fin = builtin("FIN")
    chain = chain_certificate([Member.finite([i]) for i in range(4)], fin)
    obj = json.loads(json.dumps(chain_certificate_to_json(chain, fin)))
    assert verify_payload(obj) == (True, [])
    obj["witnesses"][2] = [9, 9, 9]
    assert not verify_payload(obj)[0]


def test_type_certificate_canonical_round_trip():
    o = builtin("TMAX")
    cert = detect_type(o, "max", 3).certificate
    obj = json.loads(json.dumps(type_certificate_to_json(cert, o)))
    back, oracle = type_certificate_from_json(obj)
    assert type_certificate_to_json(back, oracle) == obj


def test_out_of_window_reference_fails_with_reason():
    o = builtin("FIN")
    cert = detect_type(o, "max", 2).certificate
    obj = type_certificate_to_json(cert, o)
    obj["realization"][0]["inner"] = [500]
    ok, reasons = verify_payload(obj)
    assert not ok and reasons


def test_decisive_report_round_trip():
    from breadthkit.ramsey import Colouring, decisive_check
    E = spread_standard(4)
    rep = decisive_check(Colouring.trivial(E.join), 0, builtin("FIN"), E, count=50)
    obj = json.loads(json.dumps(rep.to_json()))
    assert decisive_report_from_json(obj).to_json() == obj


def test_unknown_kind_is_a_payload_error():
    with pytest.raises(PayloadError):
        verify_payload({"kind": "mystery"})


# -- usage and format errors -----------------------------------------------------------------------

def test_usage_errors():
    assert run("frobnicate")[0] == 64
    assert run("breadth", "x.json", "--bogus")[0] == 64
    assert run("breadth", "/nonexistent/file.json")[0] == 64
    assert run()[0] == 64


def test_malformed_json_reports_location(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"ground": \n  [1, }')
    code, rep = run("breadth", p)
    assert code == 65 and ":2:" in rep["payload"]["error"]


def test_wrong_shape_is_data_error(tmp_path):
    assert run("breadth", dump(tmp_path, "x.json", {"members": 3}))[0] == 65
    assert run("verify", dump(tmp_path, "y.json", {"kind": "mystery"}))[0] == 65


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "breadthkit.cli", "gen", "chain", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["outcome"] == "positive"
