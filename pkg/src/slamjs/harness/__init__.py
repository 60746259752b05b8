"""Reference corpus, program generators and property runners."""
from .corpus import CORPUS, CaseOutcome, CorpusCase, CorpusError, CorpusRunner, CorpusSummary, get_case
from .generators import programs, programs_with_holes, subterm_paths
from .proptest import PROPERTIES, PropertyFailure, PropertyReport, PropertyRunner

__all__ = [
    "CORPUS",
    "CaseOutcome",
    "CorpusCase",
    "CorpusError",
    "CorpusRunner",
    "CorpusSummary",
    "PROPERTIES",
    "PropertyFailure",
    "PropertyReport",
    "PropertyRunner",
    "get_case",
    "programs",
    "programs_with_holes",
    "subterm_paths",
]
