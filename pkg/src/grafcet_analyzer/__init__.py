"""Static analysis of GRAFCET specifications.

A structural concurrency gate decides which partial Grafcets behave like
sequential programs; those are then analyzed by interval abstract
interpretation over their control flow.
"""

from .analysis import AnalysisResult, Diagnostic, analyze_partial, interpret, normalize
from .concurrency import ConcurrencyReport, ConcurrencyViolation, concurrent_steps, gate
from .domain import AbstractEnv, Interval
from .frontend import build_report, emit_report, format_grafcet, parse, parse_file
from .model import Grafcet, ModelError, PartialGrafcet, validate

__version__ = "0.1.0"
