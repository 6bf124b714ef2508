import json
from pathlib import Path

import numpy as np
import pytest

from graph_core import Digraph, read_graph, write_graph
from main import EXIT_CONFIG, EXIT_OK, EXIT_STAGE, build_parser, main
from tests.graphs import two_cliques


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["--version"])
    assert info.value.code == 0
    assert "tabgraph" in capsys.readouterr().out


def test_synth_writes_table_and_groups(tmp_path):
    code = main(["synth", "--out", str(tmp_path), "--groups", "2", "--cols", "3", "--rows", "100"])
    assert code == EXIT_OK
    header = Path(tmp_path, "synthetic.csv").read_text().splitlines()[0]
    assert header == "g0_c0,g0_c1,g0_c2,g1_c0,g1_c1,g1_c2"
    groups = json.loads(Path(tmp_path, "synthetic_groups.json").read_text())
    assert groups["g1_c2"] == 1


def test_graph_stages_on_a_given_graph(tmp_path):
    graph = tmp_path / "cliques.json"
    write_graph(two_cliques(4), graph)
    for command in ("hits", "filter", "spectral"):
        assert main([command, "--graph", str(graph), "--out", str(tmp_path)]) == EXIT_OK
    assert Path(tmp_path, "hits.csv").is_file()
    assert read_graph(Path(tmp_path, "backbone.json")).n == 8
    assert Path(tmp_path, "torus.svg").is_file()


def test_embed_query_prints_ranking(tmp_path, capsys):
    graph = tmp_path / "cliques.graphml"
    write_graph(two_cliques(4, bridge=False), graph)
    code = main(["embed", "--graph", str(graph), "--out", str(tmp_path), "--query", "v0", "-k", "3"])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["query"] == "v0"
    assert len(doc["results"]) == 3
    assert Path(tmp_path, "similar_v0.json").is_file()


def test_missing_config_file_exits_with_config_code(tmp_path):
    assert main(["pipeline", "--config", str(tmp_path / "absent.env")]) == EXIT_CONFIG


def test_bad_flag_value_exits_with_config_code(tmp_path):
    assert main(["hits", "--alpha", "2.0", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_failing_stage_exits_with_stage_code(tmp_path):
    graph = tmp_path / "empty.json"
    write_graph(Digraph(["a", "b"], np.zeros((2, 2))), graph)
    assert main(["hits", "--graph", str(graph), "--out", str(tmp_path)]) == EXIT_STAGE
    assert Path(tmp_path, "FAILED").read_text().startswith("hits")


def test_validate_reports_missing_artifacts(tmp_path, capsys):
    assert main(["validate", str(tmp_path), "--out", str(tmp_path)]) == EXIT_STAGE
    assert "missing" in capsys.readouterr().out


@pytest.mark.parametrize("command", ["synth", "build-graph"])
def test_negative_seed_exits_with_config_code(tmp_path, command):
    out = tmp_path / "out"
    assert main([command, "--seed", "-1", "--input", "synthetic", "--out", str(out)]) == EXIT_CONFIG
    assert not Path(out, "FAILED").exists()
