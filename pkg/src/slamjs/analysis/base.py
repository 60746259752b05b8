"""Shared vocabulary of the static analyses."""
from enum import Enum


class Variant(str, Enum):
    """Which 0CFA flavour to run."""

    SIMPLE = "simple"
    IMPROVED = "improved"


class AnalysisError(ValueError):
    """The analysis cannot be applied to the given program."""
