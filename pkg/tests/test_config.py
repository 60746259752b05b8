import pytest

from slamjs.analysis import Variant
from slamjs.config import (
    ConfigError,
    FlowFormat,
    RunConfig,
    VariantSelection,
    apply_env_overrides,
    load_config,
)


@pytest.fixture
def config_file(tmp_path):
    """Writes YAML text to a temporary config file and returns its path."""
    def _write(text: str):
        path = tmp_path / "slamjs.yaml"
        path.write_text(text, encoding="utf-8")
        return path
    return _write


# --- Defaults ---

def test_defaults():
    config = load_config(environ={})
    assert config == RunConfig()
    assert config.eval.fuel == 100_000
    assert config.analysis.variant is VariantSelection.SIMPLE
    assert config.analysis.dump_flows is None
    assert config.properties.seed == 0
    assert config.properties.cases == 500
    assert config.properties.trials == 50
    assert config.workers == 1
    assert config.json_output is False


def test_variant_selection_expands():
    assert VariantSelection.BOTH.variants() == [Variant.SIMPLE, Variant.IMPROVED]
    assert VariantSelection("improved").variants() == [Variant.IMPROVED]


# --- YAML ---

def test_yaml_file_is_loaded(config_file):
    path = config_file(
        """
eval:
  fuel: 5000
  trace: true
analysis:
  variant: both
  dump_flows: dot
properties:
  seed: 42
  fuel: 1000
workers: 4
"""
    )
    config = load_config(path, environ={})
    assert config.eval.fuel == 5000
    assert config.eval.trace is True
    assert config.analysis.variant is VariantSelection.BOTH
    assert config.analysis.dump_flows is FlowFormat.DOT
    assert config.properties.seed == 42
    assert config.workers == 4


def test_empty_file_gives_defaults(config_file):
    assert load_config(config_file(""), environ={}) == RunConfig()


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="Failed to load config"):
        load_config(tmp_path / "absent.yaml", environ={})


def test_malformed_yaml(config_file):
    with pytest.raises(ConfigError, match="Failed to load config"):
        load_config(config_file("eval: [unclosed"), environ={})


def test_non_mapping_yaml(config_file):
    with pytest.raises(ConfigError, match="must contain a mapping"):
        load_config(config_file("- 1\n- 2\n"), environ={})


@pytest.mark.parametrize(
    "text",
    [
        "eval:\n  fuel: 0\n",
        "eval:\n  steps: 10\n",
        "analysis:\n  variant: fancy\n",
        "properties:\n  extra_stages: 3\n",
        "workers: 0\n",
        "colour: red\n",
    ],
)
def test_invalid_values_are_rejected(config_file, text):
    with pytest.raises(ConfigError, match="Invalid configuration"):
        load_config(config_file(text), environ={})


def test_property_fuel_cannot_exceed_eval_fuel(config_file):
    path = config_file("eval:\n  fuel: 100\nproperties:\n  fuel: 200\n")
    with pytest.raises(ConfigError, match="exceeds eval.fuel"):
        load_config(path, environ={})


def test_small_eval_fuel_lowers_unset_property_fuel(config_file):
    config = load_config(config_file("eval:\n  fuel: 500\n"), environ={})
    assert config.eval.fuel == 500
    assert config.properties.fuel == 500


def test_property_fuel_set_below_eval_fuel_is_kept(config_file):
    path = config_file("eval:\n  fuel: 500\nproperties:\n  fuel: 300\n")
    assert load_config(path, environ={}).properties.fuel == 300


# --- Environment ---

def test_environment_overrides_file(config_file):
    path = config_file("properties:\n  seed: 1\n  cases: 9\n")
    environ = {
        "SLAMJS_SEED": "77",
        "SLAMJS_FUEL": "3000",
        "SLAMJS_VARIANT": "improved",
        "SLAMJS_WORKERS": "2",
    }
    config = load_config(path, environ=environ)
    assert config.properties.seed == 77
    assert config.properties.cases == 9
    assert config.eval.fuel == 3000
    assert config.analysis.variant is VariantSelection.IMPROVED
    assert config.workers == 2


def test_small_fuel_from_environment_is_accepted():
    config = load_config(None, {"SLAMJS_FUEL": "1000"})
    assert config.eval.fuel == 1000
    assert config.properties.fuel == 1000


def test_bad_environment_value_is_reported():
    with pytest.raises(ConfigError, match="Invalid configuration"):
        load_config(environ={"SLAMJS_CASES": "many"})


def test_apply_env_overrides_copies_sections():
    data = {"properties": {"seed": 1}}
    merged = apply_env_overrides(data, {"SLAMJS_SEED": "5"})
    assert merged == {"properties": {"seed": "5"}}
    assert data == {"properties": {"seed": 1}}


def test_os_environ_is_the_default(monkeypatch):
    monkeypatch.setenv("SLAMJS_SEED", "13")
    assert load_config().properties.seed == 13
