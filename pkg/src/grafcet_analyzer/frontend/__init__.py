"""Text format, reports and command-line driver."""

from .parser import GrafcetParseError, ParseError, SourceSpan, Token, parse, parse_file, tokenize
from .printer import format_expr, format_grafcet, format_partial
from .report import SCHEMA_VERSION, ModelSummary, PartialReport, Report, build_report, emit_report, report_json
