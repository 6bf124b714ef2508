"""Interpretability graph: one model per column, edges from mean |SHAP|.

w(u -> v) = Acc(v) * eps(u -> v) / sum_z eps(z -> v), where eps(u -> v) is
the mean absolute attribution of feature u in the model predicting v.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from gbm import GbmParams, fit, infer_task
from graph_core import Digraph
from treeshap import abs_attributions
from utils.diagnostics import warn
from utils.errors import GraphError, TableError

MIN_COLUMNS = 3


@dataclass(eq=False)
class ColumnFit:
    column: int
    seed: int
    model: Optional[object] = None
    # |phi| per row, full table width, zero at the target's own column
    attributions: Optional[np.ndarray] = None
    error: Optional[str] = None

    @property
    def ok(self):
        return self.error is None


@dataclass(eq=False)
class InterpBuild:
    table: object
    fits: list
    epsilon: np.ndarray
    acc: np.ndarray
    graph: Digraph
    seed: int
    params: GbmParams = field(default_factory=GbmParams)

    @property
    def models(self):
        return [f.model for f in self.fits]

    @property
    def n_rows(self):
        return self.table.n_rows


def column_seed(master_seed, column):
    return int(master_seed) ^ int(column)


def edge_weights(epsilon, acc):
    """Normalize each target column of epsilon to sum to Acc(target)."""
    eps = np.array(epsilon, dtype=np.float64)
    np.fill_diagonal(eps, 0.0)
    totals = eps.sum(axis=0)
    W = np.zeros_like(eps)
    nonzero = totals > 0
    W[:, nonzero] = eps[:, nonzero] * (np.asarray(acc)[nonzero] / totals[nonzero])
    return W


def fit_column(table, column, params, master_seed):
    """Fit the model predicting one column and collect |phi| for every row."""
    spec = table.specs[column]
    features = [j for j in range(table.n_cols) if j != column]
    seed = column_seed(master_seed, column)
    X = table.values[:, features]
    y = table.values[:, column]
    model = fit(
        X,
        y,
        infer_task(spec),
        params,
        seed=seed,
        n_classes=spec.cardinality,
        target=spec,
        features=features,
    )
    attributions = np.zeros((table.n_rows, table.n_cols))
    attributions[:, features] = abs_attributions(model, X)
    return ColumnFit(column, seed, model, attributions)


def build_global_graph(table, params=None, master_seed=0, threads=None):
    """Fit every column concurrently and assemble the global graph."""
    if table.n_cols < MIN_COLUMNS:
        raise TableError(f"At least {MIN_COLUMNS} columns are required, got {table.n_cols}")
    params = params or GbmParams()

    fits = [None] * table.n_cols
    with ThreadPoolExecutor(max_workers=threads) as column_executor:
        future_to_column = {
            column_executor.submit(fit_column, table, column, params, master_seed): column
            for column in range(table.n_cols)
        }
        for future in as_completed(future_to_column):
            column = future_to_column[future]
            try:
                fits[column] = future.result()
            except Exception as e:
                name = table.specs[column].name
                logging.error(f"Error fitting model for column {name}: {e}")
                warn("column_skipped", column=name, reason=str(e))
                fits[column] = ColumnFit(column, column_seed(master_seed, column), error=str(e))

    epsilon = np.zeros((table.n_cols, table.n_cols))
    acc = np.zeros(table.n_cols)
    for f in fits:
        if f.ok:
            epsilon[:, f.column] = f.attributions.mean(axis=0)
            acc[f.column] = f.model.acc

    graph = Digraph(tuple(table.names), edge_weights(epsilon, acc))
    logging.info(f"Built interpretability graph with {graph.n} vertices and {graph.n_edges} edges")
    return InterpBuild(table, fits, epsilon, acc, graph, master_seed, params)


def local_epsilon(build, row_index):
    """eps restricted to one row: |phi| of that row for every target."""
    if not 0 <= int(row_index) < build.n_rows:
        raise GraphError(f"Row {row_index} is outside 0..{build.n_rows - 1}")
    eps = np.zeros_like(build.epsilon)
    for f in build.fits:
        if f.ok:
            eps[:, f.column] = f.attributions[int(row_index)]
    return eps


def build_local_graph(build, row_index):
    """Per-instance graph; reuses the global models and Acc(v)."""
    return build.graph.with_weights(edge_weights(local_epsilon(build, row_index), build.acc))


def build_local_graphs(build, rows, threads=None):
    rows = list(rows)
    graphs = [None] * len(rows)
    with ThreadPoolExecutor(max_workers=threads) as row_executor:
        future_to_row = {
            row_executor.submit(build_local_graph, build, row): position
            for position, row in enumerate(rows)
        }
        for future in as_completed(future_to_row):
            graphs[future_to_row[future]] = future.result()
    return graphs


def build_manifest(build):
    columns = []
    for f in build.fits:
        spec = build.table.specs[f.column]
        columns.append(
            {
                "name": spec.name,
                "index": f.column,
                "task": f.model.task if f.ok else infer_task(spec),
                "seed": f.seed,
                "acc": float(build.acc[f.column]),
                "status": "ok" if f.ok else "failed",
                "error": f.error,
            }
        )
    return {
        "master_seed": build.seed,
        "n_rows": build.n_rows,
        "gbm_params": build.params.to_dict(),
        "columns": columns,
    }
