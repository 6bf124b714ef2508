import json

from utils.diagnostics import attach_file, detach, warn


def test_warnings_reach_the_json_lines_file(tmp_path):
    path = tmp_path / "diagnostics.jsonl"
    handler = attach_file(path)
    try:
        record = warn("column_dropped", column="k", reason="zero variance")
    finally:
        detach(handler)
    warn("after_detach")
    assert record == {"level": "warning", "event": "column_dropped", "column": "k", "reason": "zero variance"}
    lines = path.read_text(encoding="utf-8").splitlines()
    assert [json.loads(line) for line in lines] == [record]
