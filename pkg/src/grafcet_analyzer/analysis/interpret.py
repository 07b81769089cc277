"""Worklist abstract interpretation of one partial Grafcet over its control flow."""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..domain import AbstractEnv, assign, filter
from ..model import Grafcet, PartialGrafcet
from .flow import ActionNode, FlowNode, NormalizedFlow, StepNode, TransitionNode, normalize

DEFAULT_MAX_VISITS = 10_000
DEFAULT_WIDEN_DELAY = 3


class IterationLimitError(RuntimeError):
    """The worklist exceeded its visit budget; points at a widening bug."""

    def __init__(self, partial: str, visits: int):
        super().__init__(f"ITERATION_LIMIT: analysis of {partial} exceeded {visits} node visits")
        self.partial = partial
        self.visits = visits


@dataclass
class Diagnostic:
    kind: str
    node: str
    detail: str = ""

    def to_json(self) -> dict:
        return {"kind": self.kind, "node": self.node, "detail": self.detail}


@dataclass
class AnalysisResult:
    partial: str
    flow: NormalizedFlow
    tracked: tuple[str, ...]
    env_before: dict[FlowNode, AbstractEnv]
    fixpoint: dict[FlowNode, AbstractEnv]
    iterations: int
    wall_time: float
    sound: bool = True
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def env(self, ident: str) -> AbstractEnv:
        return self.env_before[self.flow.node(ident)]


def tracked_variables(p: PartialGrafcet, g: Grafcet) -> tuple[str, ...]:
    """Internal and output variables written by stored actions of ``p``, in declaration order."""
    written = p.stored_targets()
    return tuple(v.name for v in g.variables if v.name in written)


def transfer(node: FlowNode, env: AbstractEnv, flow: NormalizedFlow) -> AbstractEnv:
    """Effect of executing ``node`` on ``env``."""
    if env.is_bottom:
        return env
    steps = flow.step_resolver(node)
    if isinstance(node, StepNode):
        for action in flow.activation_effects(node.step):
            env = assign(env, action.target, action.value, steps)
        return env
    if isinstance(node, TransitionNode):
        return filter(env, flow.partial.transition(node.tid).condition, steps)
    if node.guard is not None:
        env = filter(env, node.guard, steps)
    return assign(env, node.target, node.value, steps)


def interpret(
    p: PartialGrafcet,
    g: Grafcet,
    *,
    widen_delay: int = DEFAULT_WIDEN_DELAY,
    narrow: bool = True,
    max_visits: int = DEFAULT_MAX_VISITS,
    order: str = "fifo",
    sound: bool = True,
    flow: Optional[NormalizedFlow] = None,
) -> AnalysisResult:
    """Compute the environment just before each node of ``p`` executes.

    Entry steps start with every tracked variable at ``[0,0]`` (forced entries
    at their sort range). Widening is applied at loop heads once a head has
    grown ``widen_delay`` times; a single decreasing pass in reverse post-order
    then recovers bounds lost to widening.
    """
    started = time.perf_counter()
    flow = flow or normalize(p, g)
    tracked = tracked_variables(p, g)
    sorts = {v.name: v.sort for v in g.variables}

    bottom = AbstractEnv.bottom(tracked, sorts)
    init: dict[FlowNode, AbstractEnv] = {n: bottom for n in flow.nodes}
    for n in flow.forced_entries:
        init[n] = init[n].join(AbstractEnv.top(tracked, sorts))
    for n in flow.entries:
        init[n] = init[n].join(AbstractEnv.constant(tracked, sorts, 0))
    env = dict(init)

    if order not in ("fifo", "lifo"):
        raise ValueError(f"unknown worklist order {order!r}")
    loop_heads = flow.loop_heads
    growths: dict[FlowNode, int] = {}
    key = {n: i for i, n in enumerate(flow.nodes)}
    work = deque(sorted(flow.entries | flow.forced_entries, key=key.__getitem__))
    visits = 0

    # The worklist is drained in rounds: every node polled in a round reads the
    # environments as they were when the round began, and the contributions are
    # joined before any successor is updated. Join being commutative, the
    # polling order cannot influence widening and the result is order-independent.
    while work:
        incoming: dict[FlowNode, AbstractEnv] = {}
        pop = work.popleft if order == "fifo" else work.pop
        while work:
            n = pop()
            visits += 1
            if visits > max_visits:
                raise IterationLimitError(p.name, max_visits)
            out = transfer(n, env[n], flow)
            if out.is_bottom:
                continue
            for m in flow.succ[n]:
                incoming[m] = incoming[m].join(out) if m in incoming else out
        for m in sorted(incoming, key=key.__getitem__):
            out = incoming[m]
            if out.leq(env[m]):
                continue
            new = env[m].join(out)
            if m in loop_heads:
                growths[m] = growths.get(m, 0) + 1
                if growths[m] > widen_delay:
                    new = env[m].widen(new)
            env[m] = new
            work.append(m)

    if narrow:
        preds = flow.preds()
        for n in flow.rpo:
            visits += 1
            incoming = init[n]
            for q in preds[n]:
                incoming = incoming.join(transfer(q, env[q], flow))
            env[n] = incoming.meet(env[n])

    result = AnalysisResult(
        partial=p.name,
        flow=flow,
        tracked=tracked,
        env_before=_account_for_concurrency(flow, env),
        fixpoint=env,
        iterations=visits,
        wall_time=time.perf_counter() - started,
        sound=sound,
    )
    return result


def _account_for_concurrency(flow: NormalizedFlow, env: dict[FlowNode, AbstractEnv]):
    """Widen reported values of variables that a concurrent branch may write meanwhile.

    The gate guarantees such variables are not read at the node, so the
    fixpoint itself stays unchanged; only the reported environment is relaxed
    to the hull of every value the variable takes anywhere.
    """
    conc = flow.concurrent
    if not any(conc.values()):
        return dict(env)
    p = flow.partial
    writes = {s.id: {a.target for a in s.stored()} for s in p.steps}
    hull: dict[str, object] = {}
    for n, e in env.items():
        for candidate in (e, transfer(n, e, flow)):
            if candidate.is_bottom:
                continue
            for name, iv in candidate.items():
                hull[name] = iv if name not in hull else hull[name].join(iv)

    def concurrent_with(n: FlowNode) -> frozenset[int]:
        if isinstance(n, StepNode):
            return conc.get(n.step, frozenset())
        if isinstance(n, ActionNode) and n.via is None:
            return conc.get(n.owner, frozenset())
        tid = n.tid if isinstance(n, TransitionNode) else n.via
        up = p.transition(tid).upstream
        return frozenset().union(*(conc.get(u, frozenset()) for u in up))

    out = {}
    for n, e in env.items():
        if not e.is_bottom:
            for w in concurrent_with(n):
                for name in writes.get(w, ()):
                    if name in e and name in hull:
                        e = e.set(name, e[name].join(hull[name]))
        out[n] = e
    return out
