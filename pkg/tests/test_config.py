import pytest

from utils.config import PipelineConfig, load_config, override_config
from utils.errors import ConfigError


def test_defaults():
    config = PipelineConfig()
    assert config.alpha == 0.1
    assert config.charge == 0.1
    assert config.dims == 64
    assert config.n_sweeps == 1000
    assert not config.is_synthetic


def test_file_values_are_overridden_by_flags(tmp_path):
    settings = tmp_path / "run.env"
    settings.write_text("N_TREES=20\nalpha=0.5\ninput=synthetic\n", encoding="utf-8")
    config = load_config(settings, {"alpha": 0.2, "seed": None})
    assert config.n_trees == 20
    assert config.alpha == 0.2
    assert config.is_synthetic


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.env")


@pytest.mark.parametrize(
    "overrides",
    [{"alpha": 0.0}, {"charge": 1.5}, {"bogus": 1}, {"input": "no/such/file.csv"}, {"synth_rows": 5}, {"seed": -1}],
    ids=["alpha", "charge", "unknown-key", "missing-input", "too-few-rows", "negative-seed"],
)
def test_invalid_values_are_config_errors(overrides):
    with pytest.raises(ConfigError):
        load_config(overrides=overrides)


def test_existing_csv_is_accepted(write_csv):
    path = write_csv("a,b\n1,2\n")
    assert load_config(overrides={"input": str(path)}).input == str(path)


def test_overrides_layer_over_an_existing_config():
    base = PipelineConfig(alpha=0.3, seed=9, n_trees=15)
    config = override_config(base, overrides={"alpha": 0.8, "charge": None})
    assert config.alpha == 0.8
    assert config.seed == 9
    assert config.n_trees == 15
    assert config.charge == base.charge
    with pytest.raises(ConfigError):
        override_config(base, overrides={"seed": -2})
