"""opflow: static taint analysis for a PHP subset over an opcode IR."""

from .engine import Analyzer, AnalysisError, EntryResult, Finding, analyze_entry
from .rules import RuleSet, load_rules

__version__ = "0.1.0"

__all__ = ["Analyzer", "AnalysisError", "EntryResult", "Finding", "RuleSet", "analyze_entry",
           "load_rules", "__version__"]
