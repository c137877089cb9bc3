import json
import subprocess
import sys

import pytest

from privstate import protocol
from privstate.cli import parse_values, run


def test_parse_values():
    assert parse_values("0.3") == [0.3]
    assert parse_values("1,2,4", int) == [1, 2, 4]
    assert parse_values("1:4", int) == [1, 2, 3, 4]
    assert parse_values("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_values("0.2:0.333:0.0333") == [0.2, 0.2333, 0.2666, 0.2999]
    assert parse_values("2:1") == []
    with pytest.raises(ValueError):
        parse_values("0:1:0")
    with pytest.raises(ValueError):
        parse_values("1:2:0.5", int)


def test_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = run(["sweep", "--p", "0.2:0.333:0.0333", "--d", "2", "--l", "1", "--n", "1:4", "--out", str(out)])
    assert code == 0
    rows = protocol.records_from_csv(out.read_text())
    assert len(rows) == 4 * 4
    assert [(r["p"], r["n"]) for r in rows[:5]] == [(0.2, 1), (0.2, 2), (0.2, 3), (0.2, 4), (0.2333, 1)]
    for r in rows:
        ref = protocol.off_diag_norm(protocol.ProtocolParams(r["p"], r["d"], r["l"], r["n"]))
        assert r["norm_x"] == ref


def test_sweep_json(tmp_path):
    out = tmp_path / "sweep.json"
    assert run(["sweep", "--p", "0.3", "--n", "1,2", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert [d["n"] for d in doc] == [1, 2]
    assert set(doc[0]) == set(protocol.CSV_FIELDS)


def test_verify_example1(capsys):
    assert run(["verify", "--family", "example1", "--d", "2"]) == 0
    assert capsys.readouterr().out.strip() == "private-state: PASS, E_N = 0.585"


def test_verify_raw_fails(capsys):
    assert run(["verify", "--family", "raw", "--p", "0.3333"]) == 0
    assert capsys.readouterr().out.startswith("private-state: FAIL (")


def test_recurrence_dense_check(capsys, tmp_path):
    out = tmp_path / "rec.json"
    assert run(["recurrence", "--p", "0.3333", "--d", "2", "--l", "1", "--n", "2", "--check", "dense",
                "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "block vs dense max deviation <= 1e-10" in text
    doc = json.loads(out.read_text())
    assert doc["block_vs_dense"] <= 1e-10


def test_invalid_input_writes_nothing(tmp_path, capsys):
    out = tmp_path / "bad.csv"
    assert run(["sweep", "--p", "0.7", "--out", str(out)]) == 2
    assert not out.exists()
    assert "p must lie in" in capsys.readouterr().err
    assert run(["sweep", "--p", "0.3", "--d", "1", "--out", str(out)]) == 2
    assert not out.exists()
    assert run(["frobnicate"]) == 2


def test_cap_refusal(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("PRIVSTATE_DIM_CAP", "64")
    out = tmp_path / "big.json"
    assert run(["build", "--family", "example2", "--d", "3", "--l", "2", "--out", str(out)]) == 3
    assert not out.exists()
    assert "cap 64" in capsys.readouterr().err


def test_build_round_trip(tmp_path, capsys):
    out = tmp_path / "state.json"
    assert run(["build", "--family", "example1", "--d", "2", "--out", str(out)]) == 0
    assert run(["negativity", "--in", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "E_N = 0.585"
    assert run(["ppt", "--in", str(out)]) == 0
    assert capsys.readouterr().out.startswith("PPT: no")


def test_build_raw_block_form(tmp_path):
    out = tmp_path / "raw.json"
    assert run(["build", "--family", "raw", "--p", "0.3", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert "x" in doc


def test_security_output(capsys):
    assert run(["security", "--family", "private", "--seed", "3"]) == 0
    assert "||X|| = 0.500000" in capsys.readouterr().out


def test_pipeline(tmp_path):
    out = tmp_path / "p.csv"
    assert run(["pipeline", "--p", "0.3333333333333333", "--n", "2", "--out", str(out)]) == 0
    (row,) = protocol.records_from_csv(out.read_text())
    assert row["ppt_condition"] is True
    assert row["en_bound"] == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("target", ["eq13", "lemma1", "security_identity"])
def test_reproduce_deterministic(tmp_path, target):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["reproduce", "--target", target, "--seed", "5", "--out", str(a)]) == 0
    assert run(["reproduce", "--target", target, "--seed", "5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.startswith(f"# target={target} seed=5\n")
    assert "FAIL" not in text


def test_reproduce_json(capsys):
    assert run(["reproduce", "--target", "en_example1", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["seed"] == 0
    assert [r["status"] for r in doc["rows"]] == ["PASS"] * 3


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "privstate", "verify", "--family", "example1", "--d", "3"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout.strip() == "private-state: PASS, E_N = 0.415"
