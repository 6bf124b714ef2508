import numpy as np
import pytest

from tabular import CATEGORICAL, NUMERIC, decode, encode, generate_synthetic_table, load_csv
from utils.errors import MissingCellError, RaggedRowError, TableError


def test_load_csv_reads_header_and_rows(write_csv):
    raw = load_csv(write_csv("a,b\n1,2\n3,4\n5,6\n"))
    assert raw.names == ("a", "b")
    assert raw.n_rows == 3
    assert raw.rows[1] == ("3", "4")


def test_load_csv_headerless_names_columns(write_csv):
    raw = load_csv(write_csv("1,x\n2,y\n"), header=False)
    assert raw.names == ("c0", "c1")
    assert raw.n_rows == 2


def test_ragged_row_reports_line(write_csv):
    with pytest.raises(RaggedRowError) as info:
        load_csv(write_csv("a,b\n1,2\n3\n"))
    assert info.value.line == 3
    assert info.value.expected == 2
    assert info.value.found == 1


def test_empty_file_is_rejected(write_csv):
    with pytest.raises(TableError):
        load_csv(write_csv(""))


def test_yes_no_column_encodes_as_sorted_codes(write_csv):
    table = encode(load_csv(write_csv("flag,x\nyes,1.5\nno,2.5\nyes,0.5\n")))
    flag = table.specs[0]
    assert flag.kind == CATEGORICAL
    assert flag.labels == ("no", "yes")
    assert table.column("flag").tolist() == [1.0, 0.0, 1.0]
    assert decode(table, "flag", [0, 1]) == ["no", "yes"]


def test_constant_column_is_dropped_with_warning(write_csv):
    text = "k,x,y\n" + "".join(f"7,{i},{i % 3}\n" for i in range(10))
    table = encode(load_csv(write_csv(text)))
    assert table.names == ["x", "y"]
    assert [w["event"] for w in table.warnings] == ["column_dropped"]
    assert table.warnings[0]["column"] == "k"


def test_many_distinct_floats_stay_numeric(write_csv):
    text = "x,y\n" + "".join(f"{i * 0.37:.3f},{i % 2}\n" for i in range(40))
    table = encode(load_csv(write_csv(text)), categorical_max_cardinality=32)
    assert table.specs[0].kind == NUMERIC
    assert table.specs[1].kind == CATEGORICAL
    assert table.specs[1].cardinality == 2


def test_missing_cells_drop_rows_or_raise(write_csv):
    path = write_csv("x,y\n1,2\n,3\n4,5\n6,0\n")
    table = encode(load_csv(path))
    assert table.n_rows == 3
    assert table.warnings[0]["event"] == "rows_dropped"
    assert table.warnings[0]["count"] == 1
    with pytest.raises(MissingCellError) as info:
        encode(load_csv(path), missing_policy="error")
    assert info.value.row == 1
    assert info.value.column == "x"


def test_all_degenerate_columns_raise(write_csv):
    with pytest.raises(TableError):
        encode(load_csv(write_csv("a,b\n1,x\n1,x\n1,x\n")))


def test_encoded_values_are_read_only(write_csv):
    table = encode(load_csv(write_csv("a,b\n1,2\n3,4\n5,7\n")))
    with pytest.raises(ValueError):
        table.values[0, 0] = 9.0


def test_select_reindexes_specs(grouped_table):
    table, _ = grouped_table
    sub = table.select(["g1_c2", "g0_c0"])
    assert sub.names == ["g0_c0", "g1_c2"]
    assert [s.index for s in sub.specs] == [0, 1]
    np.testing.assert_array_equal(sub.column("g1_c2"), table.column("g1_c2"))


def test_synthetic_table_is_deterministic():
    a, groups_a = generate_synthetic_table(3, 2, 200, seed=11)
    b, groups_b = generate_synthetic_table(3, 2, 200, seed=11)
    c, _ = generate_synthetic_table(3, 2, 200, seed=12)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(groups_a, groups_b)
    assert not np.array_equal(a.values, c.values)
    assert a.names == ["g0_c0", "g0_c1", "g1_c0", "g1_c1", "g2_c0", "g2_c1"]
    assert groups_a.tolist() == [0, 0, 1, 1, 2, 2]


def test_synthetic_groups_correlate_within_not_across(grouped_table):
    table, groups = grouped_table
    corr = np.corrcoef(table.values, rowvar=False)
    same = groups[:, None] == groups[None, :]
    off_diagonal = ~np.eye(len(groups), dtype=bool)
    assert corr[same & off_diagonal].min() > 0.8
    assert np.abs(corr[~same]).max() < 0.15
