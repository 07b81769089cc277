"""Pretty-printer producing text the parser reads back to an equal model."""

from __future__ import annotations

from .. import expr as ex
from ..model import Continuous, Forcing, Grafcet, OnActivation, OnDeactivation, PartialGrafcet, Step, Stored

_OR, _AND, _COMPARE, _ADD, _MUL, _UNARY = 1, 2, 3, 4, 5, 6
_ARITH_PREC = {"+": _ADD, "-": _ADD, "*": _MUL}


def _prec(e: ex.Expr) -> int:
    if isinstance(e, ex.Or):
        return _OR
    if isinstance(e, ex.And):
        return _AND
    if isinstance(e, ex.Compare):
        return _COMPARE
    if isinstance(e, ex.Arith):
        return _ARITH_PREC[e.op]
    if isinstance(e, ex.Not) or (isinstance(e, ex.IntConst) and e.value < 0):
        return _UNARY
    return _UNARY + 1


def _wrap(e: ex.Expr, minimum: int) -> str:
    text = format_expr(e)
    return f"({text})" if _prec(e) < minimum else text


def format_expr(e: ex.Expr) -> str:
    if isinstance(e, ex.IntConst):
        return str(e.value)
    if isinstance(e, ex.BoolConst):
        return "true" if e.value else "false"
    if isinstance(e, ex.VarRef):
        return e.name
    if isinstance(e, ex.StepRef):
        return f"step({e.partial}, {e.step})"
    if isinstance(e, ex.EdgeAtom):
        return f"{e.direction}({format_expr(e.operand)})"
    if isinstance(e, ex.Not):
        return "!" + _wrap(e.operand, _UNARY)
    if isinstance(e, (ex.Or, ex.And)):
        p = _prec(e)
        op = "|" if isinstance(e, ex.Or) else "&"
        return f"{_wrap(e.lhs, p)} {op} {_wrap(e.rhs, p + 1)}"
    if isinstance(e, ex.Compare):
        return f"{_wrap(e.lhs, _COMPARE + 1)} {e.op} {_wrap(e.rhs, _COMPARE + 1)}"
    if isinstance(e, ex.Arith):
        p = _ARITH_PREC[e.op]
        return f"{_wrap(e.lhs, p)} {e.op} {_wrap(e.rhs, p + 1)}"
    raise TypeError(f"not an expression: {e!r}")


def _format_action(a) -> str:
    if isinstance(a, Continuous):
        if a.condition == ex.TRUE:
            return f"do {a.target};"
        return f"do {a.target} if {format_expr(a.condition)};"
    if isinstance(a, Stored):
        if isinstance(a.trigger, OnActivation):
            trigger = "activation"
        elif isinstance(a.trigger, OnDeactivation):
            trigger = "deactivation"
        else:
            trigger = f"event {format_expr(a.trigger.condition)}"
        return f"store {a.target} := {format_expr(a.value)} on {trigger};"
    if isinstance(a, Forcing):
        if isinstance(a.situation, tuple):
            situation = "{" + ", ".join(map(str, a.situation)) + "}"
        else:
            situation = a.situation
        return f"force {a.target_partial} to {situation};"
    raise TypeError(f"not an action: {a!r}")


def _format_step(s: Step) -> list[str]:
    head = f"step {s.id}"
    if s.initial:
        head += " initial"
    if s.marked:
        head += " marked"
    for name in s.encloses:
        head += f" encloses {name}"
    if not s.actions:
        return [head]
    return [head + " {", *(f"    {_format_action(a)}" for a in s.actions), "}"]


def format_partial(p: PartialGrafcet) -> str:
    lines = [f"partial {p.name} {{"]
    for s in p.steps:
        lines.extend("    " + line for line in _format_step(s))
    for t in p.transitions:
        up = ", ".join(map(str, t.upstream))
        down = ", ".join(map(str, t.downstream))
        lines.append(f"    transition {t.id}: {{{up}}} -> {{{down}}} when {format_expr(t.condition)};")
    lines.append("}")
    return "\n".join(lines)


def format_grafcet(g: Grafcet) -> str:
    lines = []
    # consecutive declarations of the same kind and sort share a line
    groups: list[tuple[str, str, list[str]]] = []
    for v in g.variables:
        if groups and groups[-1][:2] == (v.kind, v.sort):
            groups[-1][2].append(v.name)
        else:
            groups.append((v.kind, v.sort, [v.name]))
    for kind, sort, names in groups:
        lines.append(f"{kind} {sort} {', '.join(names)};")
    if lines:
        lines.append("")
    body = "\n\n".join(format_partial(p) for p in g.partials)
    return "\n".join(lines) + body + "\n"
