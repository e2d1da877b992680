import json

import pytest

from randworlds.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_believe_json(capsys):
    code, out, _ = run(capsys, "believe", "hepatitis.rwkb", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["status"] == "defined"
    assert doc["value"] == pytest.approx(0.8)
    assert doc["class"] == "simple"
    assert "config" in doc


def test_json_is_byte_identical(capsys):
    a = run(capsys, "believe", "ex4_16.rwkb", "--json")[1]
    b = run(capsys, "believe", "ex4_16.rwkb", "--json")[1]
    assert a == b
    assert json.loads(a)["status"] == "nonrobust"


def test_query_override_and_fixed_tau(capsys):
    code, out, _ = run(capsys, "believe", "hepatitis.rwkb", "--query", "BlueEyed(Eric)", "--json")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.25)
    code, out, _ = run(capsys, "believe", "hepatitis.rwkb", "--tau", "1=0.05,2=0.01", "--json")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.75)


def test_oracle_histogram(capsys):
    code, out, _ = run(capsys, "oracle", "coin.rwkb", "--N", "6", "--tau-all", "0.2", "--histogram")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split(",")[-1] == "count"
    assert lines[0].startswith("u1,")
    counts = [int(row.split(",")[-1]) for row in lines[1:]]
    assert counts and all(c > 0 for c in counts)


def test_oracle_values(capsys):
    code, out, _ = run(capsys, "oracle", "upper_bound.rwkb", "--N", "10,20", "--tau-all", "0.05", "--json")
    assert code == 0
    doc = json.loads(out)
    rows = doc["values"] if isinstance(doc, dict) else doc
    assert [r["N"] for r in rows] == [10, 20]


@pytest.mark.parametrize("cmd", ["check", "canon", "constraints", "maxent", "probe"])
def test_subcommands_succeed(capsys, cmd):
    code, out, _ = run(capsys, cmd, "hepatitis.rwkb")
    assert code == 0 and out.strip()


def test_constraints_text(capsys):
    _, out, _ = run(capsys, "constraints", "hepatitis.rwkb")
    assert "u1 + u2 <= (0.8 + e1)*(u1 + u2 + u5 + u6)" in out


def test_maxent_weak_json(capsys):
    code, out, _ = run(capsys, "maxent", "ex4_16.rwkb", "--weak", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["unique"] == "multiple" and len(doc["points"]) == 2


def test_defaults(capsys):
    code, out, _ = run(capsys, "defaults", "birds.rules", "--query", "Penguin -> !Fly", "--json")
    assert code == 0
    assert json.loads(out)["verdict"] == "TRUE"


def test_user_errors_exit_one(capsys, tmp_path):
    bad = tmp_path / "bad.rwkb"
    bad.write_text("vocab { predicates P; constants a; } kb { a = a; }")
    code, _, err = run(capsys, "check", str(bad))
    assert code == 1 and "equality" in err
    assert run(capsys, "believe", "no_such_file.rwkb")[0] == 1
    assert run(capsys, "believe", "hepatitis.rwkb", "--tau", "1=-3")[0] == 1
    assert run(capsys, "frobnicate")[0] == 1


def test_capacity_error_exits_two(capsys):
    code, _, err = run(capsys, "oracle", "hepatitis.rwkb", "--N", "400", "--tau-all", "0.1",
                       "--backend", "exhaustive")
    assert code == 2 and err
