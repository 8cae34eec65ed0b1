from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from varkit.cli import main, parse_expression
from varkit.structures import make_c, power

GOLDEN = Path(__file__).parent / "golden"

CASES = {
    "build_c2": ["build", "pow(C,2)", "--json"],
    "check_c_olsak": ["check", "--structure", "C", "--condition", "olsak", "--json"],
    "check_edge_olsak": ["check", "--structure", "edge", "--condition", "olsak", "--json"],
    "decompose_c2": ["decompose", "--structure", "pow(C,2)", "--n", "2", "--json"],
    "decompose_2c": ["decompose", "--structure", "union(C,C)", "--n", "2", "--json"],
    "free_meet": ["free", "--algebra", "meet", "--json"],
    "free_cpol2": ["free", "--algebra", "cpol2", "--json"],
    "con_a1sq": ["con", "--algebra", "a1^2", "--json"],
    "con_a2sq": ["con", "--algebra", "a2^2", "--json"],
}

EXIT = {"check_c_olsak": 1, "decompose_2c": 1}


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name, capsys):
    code, out, _ = run(CASES[name], capsys)
    assert code == EXIT.get(name, 0)
    assert out == (GOLDEN / f"{name}.json").read_text()
    again = run(CASES[name], capsys)[1]
    assert again == out
    payload = json.loads(out)
    assert payload["command"] == CASES[name][0] and "inputs_digest" in payload


def test_human_output_and_timing_on_stderr(capsys):
    code, out, err = run(["check", "--structure", "C", "--condition", "olsak"], capsys)
    assert code == 1 and out.startswith("none") and err.strip().endswith("s)")


def test_build_writes_file(tmp_path, capsys):
    path = tmp_path / "g.json"
    assert run(["build", "prod(C,edge)", "-o", str(path)], capsys)[0] == 0
    code, out, _ = run(["decompose", "--structure", str(path), "--n", "2"], capsys)
    assert code == 1


def test_expressions():
    assert parse_expression("pow(C, 2)") == power(make_c(), 2)
    assert parse_expression("union(loop, C)").vertex_count == 4


@pytest.mark.parametrize("argv", [
    ["build", "pow(C"],
    ["build", "nope"],
    ["check", "--structure", "C", "--condition", "unknown"],
    ["decompose", "--structure", "C", "--n", "0"],
    ["free", "--algebra", "missing.json"],
    ["con", "--algebra", "zz"],
    ["frobnicate"],
])
def test_malformed_input_exits_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and err


def test_bad_json_file(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert run(["check", "--structure", str(p), "--condition", "olsak"], capsys)[0] == 2
    p.write_text(json.dumps({"vertices": 2, "edges": [[0, 5]]}))
    assert run(["check", "--structure", str(p), "--condition", "olsak"], capsys)[0] == 2


def test_env_cap_override(monkeypatch, capsys):
    monkeypatch.setenv("VARKIT_MAX_ELEMENTS", "2")
    code, _, err = run(["free", "--algebra", "meet"], capsys)
    assert code == 2 and "cap" in err
    code, _, _ = run(["free", "--algebra", "meet", "--max-elements", "1000"], capsys)
    assert code == 0
    monkeypatch.setenv("VARKIT_MAX_ELEMENTS", "lots")
    assert run(["free", "--algebra", "meet"], capsys)[0] == 2


def test_node_cap(capsys):
    code, _, err = run(["check", "--structure", "pow(C,2)", "--condition",
                        "power_decomposition(2)", "--max-nodes", "1"], capsys)
    assert code == 2 and "cap" in err


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "varkit", "con", "--algebra", "a1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "|Con| = 2" in res.stdout
