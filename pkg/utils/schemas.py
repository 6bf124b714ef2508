"""pydantic models of the JSON artifacts in a run bundle, plus CSV headers."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

HITS_COLUMNS = ["vertex", "hub", "authority"]
DISPARITY_COLUMNS = ["u", "v", "w", "p", "w_alpha", "k_out"]
SPECTRAL_COLUMNS = ["vertex", "theta1", "theta2", "r", "x", "y", "z"]


def embedding_columns(dims):
    return ["vertex"] + [f"v{j}" for j in range(dims)]


class ColumnEntry(BaseModel):
    name: str
    kind: Literal["numeric", "categorical"]
    index: int = Field(ge=0)
    cardinality: Optional[int] = None
    labels: Optional[list[str]] = None


class TableManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    source: str
    n_rows: int = Field(ge=1)
    columns: list[ColumnEntry]
    warnings: list[dict]
    ground_truth: Optional[list[int]] = None

    @model_validator(mode="after")
    def _truth_covers_columns(self):
        if self.ground_truth is not None and len(self.ground_truth) != len(self.columns):
            raise ValueError("ground_truth must label every column")
        return self


class GraphDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    vertices: list[str] = Field(min_length=1)
    edges: list[tuple[int, int, float]]

    @model_validator(mode="after")
    def _edges_in_range(self):
        n = len(self.vertices)
        for u, v, w in self.edges:
            if not (0 <= u < n and 0 <= v < n) or u == v or w <= 0:
                raise ValueError(f"invalid edge ({u}, {v}, {w})")
        return self


class BuildColumn(BaseModel):
    name: str
    index: int
    task: Literal["regression", "binary", "multiclass"]
    seed: int
    acc: float = Field(ge=0, le=1)
    status: Literal["ok", "failed"]
    error: Optional[str] = None


class BuildManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    master_seed: int
    n_rows: int
    gbm_params: dict
    columns: list[BuildColumn]


class PartitionDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    levels: list[list[int]] = Field(min_length=1)
    description_length: float
    B_per_level: list[int]
    likelihood: Optional[list[float]] = None
    prior: Optional[list[float]] = None
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _levels_nest(self):
        expected = None
        for l, level in enumerate(self.levels):
            if expected is not None and len(level) != expected:
                raise ValueError(f"level {l} has {len(level)} entries, expected {expected}")
            expected = max(level) + 1
            if sorted(set(level)) != list(range(expected)):
                raise ValueError(f"level {l} block ids are not 0..{expected - 1}")
            if self.B_per_level[l] != expected:
                raise ValueError(f"B_per_level[{l}] disagrees with level {l}")
        if expected != 1:
            raise ValueError("top level must hold a single block")
        return self


class RunManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tabgraph_version: str
    config: dict
    seeds: dict
    versions: dict[str, str]
    artifacts: dict[str, str]
