"""Condition and value expressions over Grafcet variables.

Boolean values are the integers 0 and 1 throughout, so every expression can
be evaluated to an ``int``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Union

COMPARE_OPS = ("=", "!=", "<", "<=", ">", ">=")
ARITH_OPS = ("+", "-", "*")

NEGATED_COMPARE = {"=": "!=", "!=": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
MIRRORED_COMPARE = {"=": "=", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


@dataclass(frozen=True)
class IntConst:
    value: int


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class StepRef:
    """The step variable ``x_s``: true iff ``step`` of ``partial`` is active."""

    partial: str
    step: int


@dataclass(frozen=True)
class EdgeAtom:
    direction: str  # "rising" | "falling"
    operand: "Expr"


@dataclass(frozen=True)
class Compare:
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class And:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Or:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Arith:
    op: str
    lhs: "Expr"
    rhs: "Expr"


Expr = Union[IntConst, BoolConst, VarRef, StepRef, EdgeAtom, Compare, Not, And, Or, Arith]

TRUE = BoolConst(True)
FALSE = BoolConst(False)


def children(e: Expr) -> tuple:
    if isinstance(e, (Compare, And, Or, Arith)):
        return (e.lhs, e.rhs)
    if isinstance(e, (Not, EdgeAtom)):
        return (e.operand,)
    return ()


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal of ``e``."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def free_vars(e: Expr) -> frozenset[str]:
    return frozenset(n.name for n in walk(e) if isinstance(n, VarRef))


def step_refs(e: Expr) -> frozenset[StepRef]:
    return frozenset(n for n in walk(e) if isinstance(n, StepRef))


def has_edge(e: Expr) -> bool:
    return any(isinstance(n, EdgeAtom) for n in walk(e))


def is_atom(e: Expr) -> bool:
    return isinstance(e, (Compare, VarRef, StepRef, EdgeAtom, IntConst, BoolConst))


def push_negations(e: Expr) -> Expr:
    """Rewrite a Boolean expression so that ``Not`` only wraps step or edge atoms.

    Boolean variables become ``v = 1`` (or ``v = 0`` under negation), negated
    comparisons are flipped, and constants are folded.
    """
    return _push(e, False)


def _push(e: Expr, negate: bool) -> Expr:
    if isinstance(e, Not):
        return _push(e.operand, not negate)
    if isinstance(e, And):
        lhs, rhs = _push(e.lhs, negate), _push(e.rhs, negate)
        return Or(lhs, rhs) if negate else And(lhs, rhs)
    if isinstance(e, Or):
        lhs, rhs = _push(e.lhs, negate), _push(e.rhs, negate)
        return And(lhs, rhs) if negate else Or(lhs, rhs)
    if isinstance(e, Compare):
        return Compare(NEGATED_COMPARE[e.op], e.lhs, e.rhs) if negate else e
    if isinstance(e, VarRef):
        return Compare("=", e, IntConst(0 if negate else 1))
    if isinstance(e, BoolConst):
        return BoolConst(e.value != negate)
    if isinstance(e, IntConst):
        truth = e.value != 0
        return BoolConst(truth != negate)
    if isinstance(e, (StepRef, EdgeAtom)):
        return Not(e) if negate else e
    raise TypeError(f"not a Boolean expression: {e!r}")


# -- sorts -----------------------------------------------------------------

BOOL = "bool"
INT = "int"


def sort_errors(e: Expr, sort_of_var: Callable[[str], Optional[str]], expected: str) -> list[str]:
    """Return human-readable sort violations of ``e`` in a position of sort ``expected``.

    Comparisons and arithmetic accept Boolean operands (encoded as 0/1); Boolean
    positions accept the integer constants 0 and 1.
    """
    problems: list[str] = []
    _check_sort(e, sort_of_var, expected, problems)
    return problems


def _check_sort(e: Expr, sort_of_var, expected: str, out: list[str]) -> None:
    if isinstance(e, IntConst):
        if expected == BOOL and e.value not in (0, 1):
            out.append(f"integer constant {e.value} used as a condition")
    elif isinstance(e, VarRef):
        sort = sort_of_var(e.name)
        if sort is not None and expected == BOOL and sort != BOOL:
            out.append(f"integer variable {e.name!r} used as a condition")
    elif isinstance(e, (BoolConst, StepRef)):
        pass
    elif isinstance(e, EdgeAtom):
        _check_sort(e.operand, sort_of_var, BOOL, out)
    elif isinstance(e, Compare):
        for side in (e.lhs, e.rhs):
            _check_sort(side, sort_of_var, INT, out)
        if expected == INT:
            return
    elif isinstance(e, Arith):
        if expected == BOOL:
            out.append(f"arithmetic {e.op!r} used as a condition")
        for side in (e.lhs, e.rhs):
            _check_sort(side, sort_of_var, INT, out)
    elif isinstance(e, Not):
        _check_sort(e.operand, sort_of_var, BOOL, out)
    elif isinstance(e, (And, Or)):
        _check_sort(e.lhs, sort_of_var, BOOL, out)
        _check_sort(e.rhs, sort_of_var, BOOL, out)


# -- concrete evaluation ---------------------------------------------------


def evaluate(
    e: Expr,
    lookup: Callable[[str], int],
    step_active: Callable[[StepRef], bool] = lambda ref: False,
    edge: Callable[[EdgeAtom], bool] = lambda atom: False,
) -> int:
    """Concrete value of ``e``; Boolean results are 0 or 1."""
    if isinstance(e, IntConst):
        return e.value
    if isinstance(e, BoolConst):
        return int(e.value)
    if isinstance(e, VarRef):
        return lookup(e.name)
    if isinstance(e, StepRef):
        return int(step_active(e))
    if isinstance(e, EdgeAtom):
        return int(edge(e))
    if isinstance(e, Not):
        return int(evaluate(e.operand, lookup, step_active, edge) == 0)
    if isinstance(e, And):
        return int(
            evaluate(e.lhs, lookup, step_active, edge) != 0
            and evaluate(e.rhs, lookup, step_active, edge) != 0
        )
    if isinstance(e, Or):
        return int(
            evaluate(e.lhs, lookup, step_active, edge) != 0
            or evaluate(e.rhs, lookup, step_active, edge) != 0
        )
    a = evaluate(e.lhs, lookup, step_active, edge)
    b = evaluate(e.rhs, lookup, step_active, edge)
    if isinstance(e, Compare):
        return int(_COMPARE[e.op](a, b))
    return _ARITH[e.op](a, b)


_COMPARE = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}
_ARITH = {"+": lambda a, b: a + b, "-": lambda a, b: a - b, "*": lambda a, b: a * b}


# -- action dependence -----------------------------------------------------


def action_writes(action) -> frozenset[str]:
    target = getattr(action, "target", None)
    return frozenset([target]) if target is not None else frozenset()


def action_reads(action) -> frozenset[str]:
    names: set[str] = set()
    for attr in ("value", "condition"):
        sub = getattr(action, attr, None)
        if sub is not None:
            names |= free_vars(sub)
    trigger_cond = getattr(getattr(action, "trigger", None), "condition", None)
    if trigger_cond is not None:
        names |= free_vars(trigger_cond)
    return frozenset(names)


def depends_on(a, b) -> bool:
    """True iff executing ``a`` and ``b`` in either order can give different results.

    That is the case when both write the same variable or one writes a variable
    the other reads.
    """
    wa, wb = action_writes(a), action_writes(b)
    return bool(wa & wb or wa & action_reads(b) or wb & action_reads(a))
