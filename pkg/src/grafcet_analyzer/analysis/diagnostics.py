"""Findings derived from a finished analysis: reachability, firing, transient steps."""

from __future__ import annotations

from .. import expr as ex
from ..domain import AbstractEnv, assign, eval_arith, filter, sort_range
from .flow import ActionNode, StepNode, TransitionNode
from .interpret import AnalysisResult, Diagnostic, transfer

UNREACHABLE = "UNREACHABLE"
NEVER_FIRES = "NEVER_FIRES"
ALWAYS_FIRES = "ALWAYS_FIRES"
TRANSIENT_STEP = "TRANSIENT_STEP"
SORT_CONFLICT = "SORT_CONFLICT"


def detect_unreachable(r: AnalysisResult) -> list[Diagnostic]:
    out = []
    for n in r.flow.nodes:
        if not r.env_before[n].is_bottom:
            continue
        if isinstance(n, ActionNode):
            owner = r.env_before[StepNode(n.owner)]
            # an action of an unreachable step is implied by the step finding
            if owner.is_bottom:
                continue
            out.append(Diagnostic(UNREACHABLE, n.id, f"{n.label} never executes"))
        else:
            out.append(Diagnostic(UNREACHABLE, n.id, f"{n.label} is never reached"))
    return out


def _decidable(cond: ex.Expr, r: AnalysisResult) -> bool:
    if ex.has_edge(cond):
        return False
    if not ex.free_vars(cond) <= set(r.tracked):
        return False
    return all(ref.partial == r.partial for ref in ex.step_refs(cond))


def detect_firing(r: AnalysisResult) -> list[Diagnostic]:
    out = []
    flow = r.flow
    for n in flow.nodes:
        if not isinstance(n, TransitionNode):
            continue
        env = r.env_before[n]
        if env.is_bottom:
            continue
        cond = flow.partial.transition(n.tid).condition
        steps = flow.step_resolver(n)
        if filter(env, cond, steps).is_bottom:
            out.append(Diagnostic(NEVER_FIRES, n.id, f"condition of {n.tid} cannot hold when enabled"))
        elif _decidable(cond, r) and filter(env, ex.Not(cond), steps).is_bottom:
            out.append(Diagnostic(ALWAYS_FIRES, n.id, f"condition of {n.tid} holds whenever enabled"))
    return out


def _with_free(env: AbstractEnv, names) -> AbstractEnv:
    """Extend ``env`` by untracked variables, held fixed within one situation."""
    extra = {name: sort_range(env.sorts.get(name)) for name in sorted(names) if name not in env}
    if not extra:
        return env
    values = dict(env.items())
    values.update(extra)
    return AbstractEnv(values, env.sorts)


def detect_transient(r: AnalysisResult) -> list[Diagnostic]:
    """May-transient steps: some situation satisfies an upstream and a downstream guard in turn.

    Input variables keep their value across both guards; edge-conditioned
    transitions are skipped since an edge needs a fresh event.
    """
    flow = r.flow
    p = flow.partial
    out = []
    for s in p.steps:
        node = StepNode(s.id)
        if r.env_before[node].is_bottom:
            continue
        ins = [t for t in p.transitions if s.id in t.downstream and not ex.has_edge(t.condition)]
        outs = [t for t in p.transitions if s.id in t.upstream and not ex.has_edge(t.condition)]
        for t_in in ins:
            before = r.env_before[TransitionNode(t_in.id)]
            if before.is_bottom:
                continue
            free = set()
            for t in [t_in, *outs]:
                free |= ex.free_vars(t.condition)
            env = transfer(TransitionNode(t_in.id), _with_free(before, free), flow)
            cursor = TransitionNode(t_in.id)
            while True:
                nxt = [m for m in flow.succ[cursor] if isinstance(m, ActionNode) and m.via == t_in.id]
                if not nxt:
                    break
                cursor = nxt[0]
                env = transfer(cursor, env, flow)
            env = transfer(node, env, flow)
            hits = [
                t_out.id
                for t_out in outs
                if not filter(env, t_out.condition, flow.step_resolver(TransitionNode(t_out.id))).is_bottom
            ]
            if hits:
                out.append(
                    Diagnostic(
                        TRANSIENT_STEP,
                        node.id,
                        f"step {s.id} may be left at once: {t_in.id} then {', '.join(hits)} in one situation",
                    )
                )
                break
    return out


def detect_sort_conflicts(r: AnalysisResult) -> list[Diagnostic]:
    flow = r.flow
    out = []
    for n in flow.nodes:
        env = r.fixpoint[n]
        if env.is_bottom or isinstance(n, TransitionNode):
            continue
        steps = flow.step_resolver(n)
        if isinstance(n, StepNode):
            effects = [(a.target, a.value) for a in flow.activation_effects(n.step)]
        else:
            if n.guard is not None:
                env = filter(env, n.guard, steps)
            effects = [(n.target, n.value)]
        for target, value in effects:
            if env.is_bottom:
                break
            value_iv = eval_arith(value, env, steps)
            bound = sort_range(env.sorts.get(target))
            if value_iv.meet(bound).is_bottom:
                out.append(Diagnostic(SORT_CONFLICT, n.id, f"{target} assigned {value_iv}, outside {bound}"))
            env = assign(env, target, value, steps)
    return out


def diagnose(r: AnalysisResult) -> list[Diagnostic]:
    return (
        detect_unreachable(r)
        + detect_firing(r)
        + detect_transient(r)
        + detect_sort_conflicts(r)
    )
