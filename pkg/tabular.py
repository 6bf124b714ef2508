"""CSV ingestion, column typing/encoding and synthetic table generation."""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from utils.diagnostics import warn
from utils.errors import MissingCellError, RaggedRowError, TableError

CATEGORICAL = "categorical"
NUMERIC = "numeric"


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    index: int
    cardinality: Optional[int] = None
    labels: Optional[tuple] = None

    @property
    def is_categorical(self):
        return self.kind == CATEGORICAL

    def to_dict(self):
        return {
            "name": self.name,
            "kind": self.kind,
            "index": self.index,
            "cardinality": self.cardinality,
            "labels": list(self.labels) if self.labels is not None else None,
        }


@dataclass(frozen=True)
class RawTable:
    names: tuple
    rows: tuple
    source: str = ""

    @property
    def n_rows(self):
        return len(self.rows)


@dataclass(frozen=True, eq=False)
class EncodedTable:
    """Rows x typed columns; categoricals hold integer codes 0..cardinality-1."""

    specs: tuple
    values: np.ndarray
    warnings: tuple = field(default_factory=tuple)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2 or values.shape[1] != len(self.specs):
            raise TableError(
                f"Matrix shape {values.shape} does not match {len(self.specs)} column specs"
            )
        if values.shape[0] == 0:
            raise TableError("Encoded table has no rows")
        if not np.all(np.isfinite(values)):
            raise TableError("Encoded table contains missing or non-finite values")
        names = [s.name for s in self.specs]
        if len(set(names)) != len(names):
            raise TableError(f"Duplicate column names: {names}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_cols(self):
        return self.values.shape[1]

    @property
    def names(self):
        return [s.name for s in self.specs]

    def column(self, key):
        index = self.names.index(key) if isinstance(key, str) else int(key)
        return self.values[:, index]

    def select(self, columns):
        """Restrict to a column subset, re-indexing the specs."""
        indices = sorted({self.names.index(c) if isinstance(c, str) else int(c) for c in columns})
        if not indices:
            raise TableError("Column selection is empty")
        specs = tuple(
            ColumnSpec(s.name, s.kind, i, s.cardinality, s.labels)
            for i, s in enumerate(self.specs[j] for j in indices)
        )
        return EncodedTable(specs, self.values[:, indices], self.warnings)


def load_csv(path, header=True):
    """Read a CSV file verbatim; column names come from the header or are c0..c(M-1)."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8-sig") as handle:
            reader = csv.reader(handle)
            records = []
            width = None
            for cells in reader:
                if not cells:
                    continue
                if width is None:
                    width = len(cells)
                elif len(cells) != width:
                    raise RaggedRowError(reader.line_num, width, len(cells))
                records.append(tuple(cells))
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        logging.error(f"Error reading CSV file {path}: {e}")
        raise TableError(f"Unable to read the file {path}. Error: {e}") from e

    if not records:
        raise TableError(f"CSV file {path} is empty")

    if header:
        names = tuple(name.strip() for name in records[0])
        rows = tuple(records[1:])
        if len(set(names)) != len(names):
            raise TableError(f"Duplicate column names in header of {path}: {names}")
    else:
        names = tuple(f"c{i}" for i in range(width))
        rows = tuple(records)
    if not rows:
        raise TableError(f"CSV file {path} has a header but no data rows")
    return RawTable(names=names, rows=rows, source=str(path))


def _is_missing(cell):
    return cell.strip() == ""


def _parse_float(cell):
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if np.isfinite(value) else None


def encode(raw, categorical_max_cardinality=32, missing_policy="drop_row"):
    """Type and encode a raw table; zero-variance columns are dropped with a warning."""
    if raw.n_rows == 0 or not raw.names:
        raise TableError("Raw table is empty")
    if missing_policy not in ("drop_row", "error"):
        raise TableError(f"Unknown missing policy: {missing_policy}")

    warnings = []
    kept_rows = []
    for row_number, row in enumerate(raw.rows):
        missing = [j for j, cell in enumerate(row) if _is_missing(cell)]
        if not missing:
            kept_rows.append(row)
        elif missing_policy == "error":
            raise MissingCellError(row_number, raw.names[missing[0]])
    dropped = raw.n_rows - len(kept_rows)
    if dropped:
        warnings.append(warn("rows_dropped", count=dropped, reason="missing cells"))
    if not kept_rows:
        raise TableError("Every row has a missing cell")

    specs = []
    columns = []
    for j, name in enumerate(raw.names):
        cells = [row[j].strip() for row in kept_rows]
        parsed = [_parse_float(cell) for cell in cells]
        labels = sorted(set(cells))
        numeric_ok = all(value is not None for value in parsed)

        if not numeric_ok or len(labels) <= categorical_max_cardinality:
            if len(labels) < 2:
                warnings.append(warn("column_dropped", column=name, reason="zero variance"))
                continue
            lookup = {label: code for code, label in enumerate(labels)}
            spec = ColumnSpec(name, CATEGORICAL, len(specs), len(labels), tuple(labels))
            column = np.array([lookup[cell] for cell in cells], dtype=np.float64)
        else:
            column = np.array(parsed, dtype=np.float64)
            if np.var(column) == 0.0:
                warnings.append(warn("column_dropped", column=name, reason="zero variance"))
                continue
            spec = ColumnSpec(name, NUMERIC, len(specs))
        specs.append(spec)
        columns.append(column)

    if not specs:
        raise TableError("All columns are degenerate")
    values = np.column_stack(columns)
    logging.info(f"Encoded {values.shape[0]} rows x {values.shape[1]} columns")
    return EncodedTable(tuple(specs), values, tuple(warnings))


def decode(table, column, codes):
    """Map categorical codes of a column back to their raw labels."""
    spec = table.specs[table.names.index(column) if isinstance(column, str) else int(column)]
    if not spec.is_categorical:
        raise TableError(f"Column '{spec.name}' is numeric and has no labels")
    return [spec.labels[int(code)] for code in codes]


def generate_synthetic_table(
    n_groups, cols_per_group, n_rows, within_strength=0.9, noise_sd=0.3, seed=0
):
    """Columns in group g are within_strength * z_g plus independent noise.

    Returns the table and an array mapping each column index to its group.
    """
    if n_groups < 1 or cols_per_group < 1 or n_rows < 1:
        raise TableError("Synthetic table counts must be positive")
    if not 0.0 < within_strength <= 1.0:
        raise TableError(f"within_strength must be in (0, 1], got {within_strength}")
    if noise_sd < 0:
        raise TableError(f"noise_sd must be non-negative, got {noise_sd}")

    rng = np.random.default_rng(seed)
    latent = rng.standard_normal((n_rows, n_groups))
    noise = rng.standard_normal((n_rows, n_groups * cols_per_group))
    groups = np.repeat(np.arange(n_groups), cols_per_group)
    values = within_strength * latent[:, groups] + noise_sd * noise

    specs = tuple(
        ColumnSpec(f"g{g}_c{c}", NUMERIC, g * cols_per_group + c)
        for g in range(n_groups)
        for c in range(cols_per_group)
    )
    return EncodedTable(specs, values), groups
