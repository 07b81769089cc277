"""Control-flow abstract interpretation of sequential partial Grafcets."""

from .diagnostics import (
    ALWAYS_FIRES,
    NEVER_FIRES,
    SORT_CONFLICT,
    TRANSIENT_STEP,
    UNREACHABLE,
    detect_firing,
    detect_sort_conflicts,
    detect_transient,
    detect_unreachable,
    diagnose,
)
from .flow import ActionNode, FlowNode, NormalizedFlow, StepNode, TransitionNode, normalize
from .interpret import (
    AnalysisResult,
    Diagnostic,
    IterationLimitError,
    interpret,
    tracked_variables,
    transfer,
)
from .oracle import OracleResult, StateCapExceeded, concrete_oracle, flow_oracle


def analyze_partial(p, g, **options) -> AnalysisResult:
    """Interpret ``p`` and attach its diagnostics."""
    result = interpret(p, g, **options)
    result.diagnostics = diagnose(result)
    return result
