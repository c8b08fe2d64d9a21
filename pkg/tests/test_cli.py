from __future__ import annotations

import json
import subprocess
import sys

import pytest

from looseembed.cli import (
    EXIT_FAILED,
    EXIT_IO,
    EXIT_OK,
    EXIT_PARAMETER,
    EXIT_PARSE,
    EXIT_REFUTED,
    main,
)
from looseembed.hypercore import load_graph, two_clique_graph


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None), out


def test_gen_round_trip(tmp_path, capsys):
    path = tmp_path / "two.txt"
    code, doc, _ = run(capsys, "gen", "--family", "two-clique", "--k", "3", "--n", "13", "--out", str(path))
    assert code == EXIT_OK
    assert doc["schema"] == "looseembed.gen/1"
    graph = load_graph(str(path))
    assert graph.edges == two_clique_graph(3, 13).edges
    assert doc["result"]["edges"] == len(graph.edges) == 20 + 35


def test_certify_complete_fixture(capsys):
    code, doc, _ = run(capsys, "certify", "--graph", "complete_3_7")
    assert code == EXIT_OK
    assert doc["result"]["status"] == "certified"


def test_certify_refuted_exit_class(capsys):
    code, doc, _ = run(capsys, "certify", "--graph", "two-clique_3_10")
    assert code == EXIT_REFUTED
    assert "R2" in doc["result"]["witness"]


def test_embed_oracle_on_two_cliques(tmp_path, capsys):
    graph = tmp_path / "g.txt"
    run(capsys, "gen", "--family", "two-clique", "--k", "3", "--n", "13", "--out", str(graph))
    report = tmp_path / "r.json"
    code, doc, _ = run(capsys, "embed", "--graph", str(graph), "--tree", "random_3_13_2_0",
                       "--mode", "oracle", "--report", str(report))
    assert code == EXIT_FAILED
    assert doc["result"]["witness"]["reason"] == "disconnected"
    assert json.loads(report.read_text()) == doc


def test_embed_pipeline_success(capsys):
    code, doc, _ = run(capsys, "embed", "--graph", "complete_3_7", "--tree", "path_3_7")
    assert code == EXIT_OK
    assert doc["result"]["status"] == "embedded"
    assert len(doc["result"]["map"]["assignment"]) == 7


def test_io_and_parse_errors_are_distinguished(tmp_path, capsys):
    code, _, _ = run(capsys, "certify", "--graph", str(tmp_path / "missing.txt"))
    assert code == EXIT_IO
    bad = tmp_path / "bad.txt"
    bad.write_text("3 5\n0 1\n")
    code, _, _ = run(capsys, "certify", "--graph", str(bad))
    assert code == EXIT_PARSE
    code, _, _ = run(capsys, "tree", "gen", "--family", "random", "--k", "3", "--n", "5", "--max-degree", "1")
    assert code == EXIT_PARAMETER


def test_rational_flags_are_validated(capsys):
    with pytest.raises(SystemExit) as info:
        main(["certify", "--graph", "complete_3_7", "--eta", "3/2"])
    assert info.value.code == 2
    capsys.readouterr()


def test_reports_are_reproducible_without_timings(capsys):
    argv = ["embed", "--graph", "complete_3_7", "--tree", "random_3_7_2_4", "--seed", "5"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    first.pop("timings"), second.pop("timings")
    assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)


def test_hierarchy_warning_is_not_an_error(capsys):
    code, doc, _ = run(capsys, "certify", "--graph", "complete_3_7", "--alpha", "1/2", "--eta", "1/10")
    assert code == EXIT_OK
    assert doc["warnings"]


def test_tree_and_structure_commands(tmp_path, capsys):
    tree = tmp_path / "t.json"
    code, _, _ = run(capsys, "tree", "gen", "--family", "binary", "--k", "3", "--depth", "2", "--out", str(tree))
    assert code == EXIT_OK
    code, doc, _ = run(capsys, "tree", "validate", "--tree", str(tree))
    assert code == EXIT_OK and doc["result"]["valid"]
    code, doc, _ = run(capsys, "tree", "decompose", "--tree", "path_3_25", "--size", "5")
    assert code == EXIT_OK and doc["result"]["pieces"]
    code, doc, _ = run(capsys, "reach", "--graph", "complete_3_6", "--edge", "0,1,2")
    assert code == EXIT_OK
    code, doc, _ = run(capsys, "rotate", "--graph", "complete_4_6", "--edge", "0,1,2,3", "--sigma", "(12)")
    assert code == EXIT_OK and doc["result"]["radius"] is not None
    code, doc, _ = run(capsys, "robust", "gstar", "--graph", "parity_4_4_4")
    assert code == EXIT_OK
    code, doc, _ = run(capsys, "report", "--graph", "complete_3_7", "--tree", "path_3_7")
    assert code == EXIT_OK


def test_module_entry_point(tmp_path):
    out = tmp_path / "c.json"
    proc = subprocess.run(
        [sys.executable, "-m", "looseembed", "certify", "--graph", "complete_3_7", "--out", str(out)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == EXIT_OK
    assert json.loads(out.read_text())["result"]["status"] == "certified"
