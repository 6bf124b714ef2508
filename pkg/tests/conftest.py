import pytest

from graph_core import Digraph
from tabular import generate_synthetic_table


@pytest.fixture
def write_csv(tmp_path):
    def _write(text, name="table.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture(scope="session")
def grouped_table():
    """Two groups of three strongly correlated columns."""
    return generate_synthetic_table(2, 3, 600, within_strength=0.9, noise_sd=0.3, seed=7)


@pytest.fixture
def triangle():
    return Digraph.from_edges(["a", "b", "c"], [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])

