"""Configuration models for slamjs using Pydantic.

Settings come from an optional YAML file, then ``SLAMJS_*`` environment
variables, then command-line flags.
"""
import logging
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .analysis import Variant

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Configuration could not be read or is invalid."""


class VariantSelection(str, Enum):
    """Which analysis variants to run"""
    SIMPLE = "simple"
    IMPROVED = "improved"
    BOTH = "both"

    def variants(self) -> List[Variant]:
        if self is VariantSelection.BOTH:
            return [Variant.SIMPLE, Variant.IMPROVED]
        return [Variant(self.value)]


class FlowFormat(str, Enum):
    """Output formats for flow graph dumps"""
    DOT = "dot"
    JSON = "json"


class EvalConfig(BaseModel):
    """Evaluator settings"""
    model_config = ConfigDict(extra="forbid")

    fuel: int = Field(
        default=100_000,
        ge=1,
        description="Maximum number of reduction steps before giving up"
    )
    trace: bool = Field(
        default=False,
        description="Print every step with the rule that fired"
    )


class AnalysisConfig(BaseModel):
    """Static analysis settings"""
    model_config = ConfigDict(extra="forbid")

    variant: VariantSelection = Field(
        default=VariantSelection.SIMPLE,
        description="0CFA variant: simple, improved, or both"
    )
    dump_cfa: bool = Field(
        default=False,
        description="Print the solved abstract cache and environment as JSON"
    )
    dump_flows: Optional[FlowFormat] = Field(
        default=None,
        description="Print the flow edges as Graphviz DOT or JSON"
    )


class PropertyConfig(BaseModel):
    """Randomised property checking settings"""
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=0, description="Seed for the program generator")
    cases: int = Field(default=500, ge=1, description="Number of generated programs")
    max_depth: int = Field(
        default=4,
        ge=0,
        le=8,
        description="Depth bound of generated programs"
    )
    extra_stages: int = Field(
        default=2,
        ge=0,
        le=2,
        description="Levels of box nesting beyond stage 0"
    )
    trials: int = Field(
        default=50,
        ge=0,
        description="Random high-input replacements per noninterference check"
    )
    fuel: int = Field(
        default=2000,
        ge=1,
        description="Step budget for each evaluation of a generated program"
    )


class RunConfig(BaseModel):
    """Top-level configuration for all subcommands"""
    model_config = ConfigDict(extra="forbid")

    eval: EvalConfig = Field(default_factory=EvalConfig)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    properties: PropertyConfig = Field(default_factory=PropertyConfig)
    workers: int = Field(
        default=1,
        ge=1,
        le=64,
        description="Thread pool size for corpus runs"
    )
    json_output: bool = Field(
        default=False,
        description="Emit machine-readable JSON on stdout"
    )

    @model_validator(mode='after')
    def check_fuel_budgets(self):
        """The property budget never exceeds the evaluator's.

        An unset ``properties.fuel`` is lowered to ``eval.fuel``; two explicit
        values that conflict are an error.
        """
        if self.properties.fuel <= self.eval.fuel:
            return self
        if "fuel" in self.properties.model_fields_set:
            raise ValueError(
                f"properties.fuel ({self.properties.fuel}) exceeds eval.fuel ({self.eval.fuel})"
            )
        logger.debug(f"properties.fuel lowered to eval.fuel ({self.eval.fuel})")
        self.properties = self.properties.model_copy(update={"fuel": self.eval.fuel})
        return self


# environment variable -> (section, field)
ENV_OVERRIDES = {
    "SLAMJS_SEED": ("properties", "seed"),
    "SLAMJS_FUEL": ("eval", "fuel"),
    "SLAMJS_VARIANT": ("analysis", "variant"),
    "SLAMJS_CASES": ("properties", "cases"),
    "SLAMJS_WORKERS": (None, "workers"),
}


def apply_env_overrides(
    data: Dict[str, Any], environ: Optional[Mapping[str, str]] = None
) -> Dict[str, Any]:
    """Return a copy of raw config ``data`` with ``SLAMJS_*`` variables applied."""
    environ = os.environ if environ is None else environ
    merged = {key: dict(value) if isinstance(value, dict) else value for key, value in data.items()}
    for name, (section, key) in ENV_OVERRIDES.items():
        if name not in environ:
            continue
        logger.debug(f"{name} overrides {section or 'run'}.{key}")
        if section is None:
            merged[key] = environ[name]
        else:
            merged.setdefault(section, {})[key] = environ[name]
    return merged


def load_config(
    config_path: Optional[Union[str, Path]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """Load configuration from a YAML file and the environment.

    Args:
        config_path: YAML file to read. ``None`` starts from defaults.
        environ: Environment to read overrides from; ``os.environ`` by default.

    Raises:
        ConfigError: The file cannot be read, is not valid YAML, or fails
            validation.
    """
    data: Dict[str, Any] = {}
    if config_path is not None:
        try:
            with open(config_path, encoding="utf-8") as f:
                loaded = yaml.safe_load(f)
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"Failed to load config from {config_path}: {e}") from e
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError(f"Config file {config_path} must contain a mapping")
        data = loaded or {}
    try:
        return RunConfig(**apply_env_overrides(data, environ))
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e
