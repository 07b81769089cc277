"""Control-flow form of a partial Grafcet with stored actions normalized into nodes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .. import expr as ex
from ..concurrency import ConcurrentStepSets, concurrent_steps
from ..model import Grafcet, OnActivation, OnDeactivation, OnEvent, PartialGrafcet, Stored, entry_nodes


@dataclass(frozen=True)
class StepNode:
    step: int

    @property
    def id(self) -> str:
        return str(self.step)

    kind = "step"

    @property
    def label(self) -> str:
        return f"Step {self.step}"


@dataclass(frozen=True)
class TransitionNode:
    tid: str

    @property
    def id(self) -> str:
        return self.tid

    kind = "transition"

    @property
    def label(self) -> str:
        return f"Transition {self.tid}"


@dataclass(frozen=True)
class ActionNode:
    """Synthetic node for an on-deactivation or on-event stored action.

    ``via`` names the transition a deactivation node was spliced behind.
    """

    id: str
    owner: int
    target: str
    value: ex.Expr
    guard: Optional[ex.Expr] = None
    via: Optional[str] = None

    kind = "action"

    @property
    def label(self) -> str:
        return f"Action {self.id}"


FlowNode = Union[StepNode, TransitionNode, ActionNode]


@dataclass
class NormalizedFlow:
    partial: PartialGrafcet
    nodes: list[FlowNode]
    succ: dict[FlowNode, tuple[FlowNode, ...]]
    entries: frozenset[StepNode]
    forced_entries: frozenset[StepNode]
    concurrent: ConcurrentStepSets
    back_edges: frozenset[tuple[FlowNode, FlowNode]] = frozenset()
    rpo: list[FlowNode] = field(default_factory=list)

    @property
    def loop_heads(self) -> frozenset[FlowNode]:
        return frozenset(dst for _, dst in self.back_edges)

    def preds(self) -> dict[FlowNode, list[FlowNode]]:
        out: dict[FlowNode, list[FlowNode]] = {n: [] for n in self.nodes}
        for n in self.nodes:
            for m in self.succ[n]:
                out[m].append(n)
        return out

    def node(self, ident: str) -> FlowNode:
        for n in self.nodes:
            if n.id == ident:
                return n
        raise KeyError(ident)

    def step_resolver(self, node: FlowNode):
        """Truth of step atoms at ``node``: True, False, or None when undecided."""
        name = self.partial.name
        conc = self.concurrent
        if isinstance(node, StepNode) or (isinstance(node, ActionNode) and node.via is None):
            owner = node.step if isinstance(node, StepNode) else node.owner
            active, others = frozenset([owner]), conc.get(owner, frozenset())
        else:
            tid = node.tid if isinstance(node, TransitionNode) else node.via
            up = frozenset(self.partial.transition(tid).upstream)
            if not up:
                return lambda ref: None
            active = up
            others = frozenset().union(*(conc.get(u, frozenset()) for u in up))

        def resolve(ref: ex.StepRef) -> Optional[bool]:
            if ref.partial != name:
                return None
            if ref.step in active:
                return True
            if ref.step in others:
                return None
            return False

        return resolve

    def activation_effects(self, step: int) -> list[Stored]:
        return self.partial.step(step).stored(OnActivation)


def normalize(p: PartialGrafcet, g: Optional[Grafcet] = None) -> NormalizedFlow:
    """Build the control flow of ``p``.

    On-activation actions stay on their step node. Each on-deactivation action
    becomes a node spliced behind every downstream transition of its step.
    On-event actions become guarded nodes that may run any number of times, in
    any order, between step activation and the step's downstream transitions.
    Continuous actions produce no nodes.
    """
    steps = {s.id: StepNode(s.id) for s in p.steps}
    trans = {t.id: TransitionNode(t.id) for t in p.transitions}
    events: dict[int, list[ActionNode]] = {}
    for s in p.steps:
        events[s.id] = [
            ActionNode(f"{s.id}:event{i}", s.id, a.target, a.value, guard=a.trigger.condition)
            for i, a in enumerate(s.stored(OnEvent))
        ]

    succ: dict[FlowNode, tuple[FlowNode, ...]] = {}
    action_nodes: list[ActionNode] = []
    for s in p.steps:
        out_trans = tuple(trans[t.id] for t in p.transitions if s.id in t.upstream)
        evs = tuple(events[s.id])
        succ[steps[s.id]] = evs + out_trans
        for node in evs:
            succ[node] = evs + out_trans
        action_nodes.extend(evs)

    for t in p.transitions:
        chain: list[ActionNode] = []
        for u in t.upstream:
            if u not in steps:
                continue
            for i, a in enumerate(p.step(u).stored(OnDeactivation)):
                chain.append(ActionNode(f"{t.id}:{u}:deact{i}", u, a.target, a.value, via=t.id))
        downstream = tuple(steps[d] for d in t.downstream if d in steps)
        path: list[FlowNode] = [trans[t.id], *chain]
        for a, b in zip(path, path[1:]):
            succ[a] = (b,)
        succ[path[-1]] = downstream
        action_nodes.extend(chain)

    nodes: list[FlowNode] = [*steps.values(), *trans.values(), *action_nodes]
    regular, forced = entry_nodes(p, g)
    flow = NormalizedFlow(
        partial=p,
        nodes=nodes,
        succ=succ,
        entries=frozenset(steps[s] for s in regular),
        forced_entries=frozenset(steps[s] for s in forced),
        concurrent=concurrent_steps(p, g),
    )
    flow.back_edges, flow.rpo = _depth_first(flow)
    return flow


def _order_key(flow: NormalizedFlow):
    index = {n: i for i, n in enumerate(flow.nodes)}
    return lambda n: index[n]


def _depth_first(flow: NormalizedFlow):
    """Back edges and reverse post-order of a DFS from the entry steps."""
    key = _order_key(flow)
    roots = sorted(flow.entries, key=key) + sorted(flow.forced_entries - flow.entries, key=key)
    state: dict[FlowNode, int] = {}  # 1 = on stack, 2 = done
    back: set[tuple[FlowNode, FlowNode]] = set()
    post: list[FlowNode] = []
    for root in roots:
        if root in state:
            continue
        state[root] = 1
        stack = [(root, iter(flow.succ[root]))]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                state[node] = 2
                post.append(node)
            elif nxt not in state:
                state[nxt] = 1
                stack.append((nxt, iter(flow.succ[nxt])))
            elif state[nxt] == 1:
                back.add((node, nxt))
    rpo = post[::-1]
    rpo += [n for n in flow.nodes if n not in state]
    return frozenset(back), rpo
