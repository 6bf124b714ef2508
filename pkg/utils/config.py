import os
from pathlib import Path
from typing import Literal, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from utils.errors import ConfigError

load_dotenv()

__version__ = "0.1.0"

default_seed = int(os.getenv("TABGRAPH_SEED", "0"))
default_threads = os.getenv("TABGRAPH_THREADS")
default_log_level = os.getenv("TABGRAPH_LOG_LEVEL", "WARNING")
default_out = os.getenv("TABGRAPH_OUT", "tabgraph_out")
default_alpha = float(os.getenv("TABGRAPH_ALPHA", "0.1"))
default_charge = float(os.getenv("TABGRAPH_CHARGE", "0.1"))

SYNTHETIC_INPUT = "synthetic"


class PipelineConfig(BaseModel):
    """Every knob of a pipeline run; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    input: Optional[str] = None
    header: bool = True
    categorical_max_cardinality: int = Field(32, ge=1)
    missing_policy: Literal["drop_row", "error"] = "drop_row"

    seed: int = Field(default_seed, ge=0)
    threads: Optional[int] = Field(None, ge=1)
    out: str = default_out

    n_trees: int = Field(100, ge=1)
    max_depth: int = Field(4, ge=1)
    learning_rate: float = Field(0.1, gt=0)
    min_child_cover: int = Field(5, ge=1)
    holdout_fraction: float = Field(0.25, gt=0, lt=1)

    alpha: float = Field(default_alpha, gt=0, le=1)
    charge: float = Field(default_charge, ge=0, le=1)

    n_sweeps: int = Field(1000, ge=0)
    anneal: bool = False
    agglomeration_factor: float = Field(2.0, gt=1)
    nsbm_restarts: int = Field(5, ge=1)

    walk_length: int = Field(80, ge=1)
    walks_per_vertex: int = Field(10, ge=1)
    walk_p: float = Field(1.0, gt=0)
    walk_q: float = Field(1.0, gt=0)
    symmetrize_walks: bool = False
    dims: int = Field(64, ge=1)
    window: int = Field(5, ge=1)
    negative: int = Field(5, ge=1)
    epochs: int = Field(5, ge=1)
    embed_lr: float = Field(0.025, gt=0)

    layout_iterations: int = Field(500, ge=1)

    synth_groups: int = Field(4, ge=1)
    synth_cols: int = Field(6, ge=1)
    synth_rows: int = Field(4000, ge=20)
    synth_strength: float = Field(0.9, gt=0, le=1)
    synth_noise: float = Field(0.3, ge=0)

    @field_validator("input")
    @classmethod
    def _input_resolvable(cls, value):
        if value is None or value == SYNTHETIC_INPUT:
            return value
        if not Path(value).is_file():
            raise ValueError(f"input file not found: {value}")
        return value

    @property
    def is_synthetic(self):
        return self.input == SYNTHETIC_INPUT


def _environment_values():
    values = {"seed": default_seed, "out": default_out}
    if default_threads:
        values["threads"] = default_threads
    return values


def _merge(values, path, overrides):
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"Config file not found: {path}")
        file_values = dotenv_values(path)
        values.update({k.strip().lower(): v for k, v in file_values.items() if v is not None})
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return PipelineConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def load_config(path=None, overrides=None):
    """Merge defaults, environment, a key=value file and flag overrides."""
    return _merge(_environment_values(), path, overrides)


def override_config(base, path=None, overrides=None):
    """Layer a key=value file and flag overrides over an existing configuration."""
    return _merge(base.model_dump(), path, overrides)
