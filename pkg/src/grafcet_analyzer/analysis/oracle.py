"""Brute-force concrete semantics for small partial Grafcets (test oracle).

Evolution model, one cycle at a time:

1. new values for every untracked variable are chosen (all combinations);
2. on-event actions of active steps whose condition holds execute;
3. every enabled transition is evaluated; at most one firable transition
   fires: deactivation actions of its upstream steps run, then its downstream
   steps are activated and their activation actions run.

Rising/falling edges over input-only operands compare against the previous
cycle's inputs; other edges and step atoms of foreign partials are free bits.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .. import expr as ex
from ..model import INPUT, BOOL, Grafcet, OnActivation, OnDeactivation, OnEvent, PartialGrafcet, entry_nodes
from .flow import ActionNode, NormalizedFlow, StepNode, TransitionNode
from .interpret import tracked_variables


class StateCapExceeded(RuntimeError):
    pass


@dataclass
class OracleResult:
    tracked: tuple[str, ...]
    stores: dict[str, set[tuple[int, ...]]]  # node id -> stores seen just before the node
    states: int

    def as_dicts(self, node: str) -> list[dict[str, int]]:
        return [dict(zip(self.tracked, st)) for st in sorted(self.stores.get(node, ()))]


class _SortViolation(Exception):
    pass


def _partial_exprs(p: PartialGrafcet):
    for t in p.transitions:
        yield t.condition
    for s in p.steps:
        for a in s.stored():
            yield a.value
            if isinstance(a.trigger, OnEvent):
                yield a.trigger.condition


def _nondeterminism(p: PartialGrafcet, g: Grafcet, tracked, bounds, domains=None):
    """Untracked variables and free atoms read by ``p`` with their value ranges.

    ``domains`` overrides the value set of individual variables.
    """
    names: set[str] = set()
    free_atoms: set = set()
    inputs = {v.name for v in g.variables if v.kind == INPUT}
    for e in _partial_exprs(p):
        names |= ex.free_vars(e) - set(tracked)
        for node in ex.walk(e):
            if isinstance(node, ex.StepRef) and node.partial != p.name:
                free_atoms.add(node)
            elif isinstance(node, ex.EdgeAtom) and not ex.free_vars(node.operand) <= inputs:
                free_atoms.add(node)
    ordered = sorted(names)
    lo, hi = bounds
    overrides = domains or {}
    values = [
        tuple(overrides[n]) if n in overrides else (0, 1) if g.sort_of(n) == BOOL else tuple(range(lo, hi + 1))
        for n in ordered
    ]
    atoms = sorted(free_atoms, key=repr)
    return ordered, values, atoms


def concrete_oracle(
    p: PartialGrafcet,
    g: Grafcet,
    bounds: tuple[int, int] = (0, 3),
    depth: Optional[int] = 8,
    state_cap: int = 1_000_000,
    domains: Optional[dict[str, tuple[int, ...]]] = None,
) -> OracleResult:
    """Enumerate every reachable (situation, store) within ``depth`` cycles.

    Returns, per step and transition id, the tracked-variable stores observed
    just before the node executes. ``depth=None`` runs to saturation.
    """
    tracked = tracked_variables(p, g)
    index = {n: i for i, n in enumerate(tracked)}
    sorts = {v.name: v.sort for v in g.variables}
    names, values, atoms = _nondeterminism(p, g, tracked, bounds, domains)
    valuations = [dict(zip(names, vals)) for vals in itertools.product(*values)]
    bit_choices = list(itertools.product((0, 1), repeat=len(atoms)))
    seen: dict[str, set[tuple[int, ...]]] = {str(s.id): set() for s in p.steps}
    seen.update({t.id: set() for t in p.transitions})

    def run(store: tuple, inputs: dict, prev: dict, bits: dict, situation: frozenset):
        def lookup(name: str) -> int:
            return store[index[name]] if name in index else inputs[name]

        def step_active(ref: ex.StepRef) -> bool:
            return ref.step in situation if ref.partial == p.name else bool(bits[ref])

        def edge(atom: ex.EdgeAtom) -> bool:
            if atom in bits:
                return bool(bits[atom])
            before = ex.evaluate(atom.operand, lambda n: prev[n], step_active)
            after = ex.evaluate(atom.operand, lambda n: inputs[n], step_active)
            return (before == 0 and after != 0) if atom.direction == "rising" else (before != 0 and after == 0)

        return lambda e: ex.evaluate(e, lookup, step_active, edge)

    def execute(store: tuple, action, ev) -> tuple:
        value = ev(action.value)
        if sorts.get(action.target) == BOOL and value not in (0, 1):
            raise _SortViolation(action.target)
        updated = list(store)
        updated[index[action.target]] = value
        return tuple(updated)

    def activate(store, steps_on, inputs, prev, bits, situation):
        for sid in steps_on:
            seen[str(sid)].add(store)
        for sid in steps_on:
            for a in p.step(sid).stored(OnActivation):
                store = execute(store, a, run(store, inputs, prev, bits, situation))
        return store

    zero = tuple(0 for _ in tracked)
    start = sorted(entry_nodes(p, g).regular)
    initial_states = set()
    for inputs in valuations:
        for choice in bit_choices:
            bits = dict(zip(atoms, choice))
            try:
                store = activate(zero, start, inputs, inputs, bits, frozenset(start))
            except _SortViolation:
                continue
            initial_states.add((frozenset(start), store, tuple(sorted(inputs.items()))))

    frontier = deque((st, 0) for st in initial_states)
    visited = set(initial_states)
    while frontier:
        (situation, store, prev_items), d = frontier.popleft()
        if depth is not None and d >= depth:
            continue
        prev = dict(prev_items)
        for inputs in valuations:
            for choice in bit_choices:
                bits = dict(zip(atoms, choice))
                try:
                    successors = _cycle(p, situation, store, inputs, prev, bits, run, execute, activate, seen)
                except _SortViolation:
                    continue
                for nxt_sit, nxt_store in successors:
                    state = (nxt_sit, nxt_store, tuple(sorted(inputs.items())))
                    if state in visited:
                        continue
                    visited.add(state)
                    if len(visited) > state_cap:
                        raise StateCapExceeded(f"STATE_CAP: more than {state_cap} states in {p.name}")
                    frontier.append((state, d + 1))
    return OracleResult(tracked, seen, len(visited))


def _cycle(p, situation, store, inputs, prev, bits, run, execute, activate, seen):
    for sid in sorted(situation):
        for a in p.step(sid).stored(OnEvent):
            ev = run(store, inputs, prev, bits, situation)
            if ev(a.trigger.condition):
                store = execute(store, a, ev)
    results = [(situation, store)]
    ev = run(store, inputs, prev, bits, situation)
    for t in p.transitions:
        if not set(t.upstream) <= situation:
            continue
        seen[t.id].add(store)
        if not ev(t.condition):
            continue
        after = store
        for u in t.upstream:
            for a in p.step(u).stored(OnDeactivation):
                after = execute(after, a, run(after, inputs, prev, bits, situation))
        new_sit = (situation - set(t.upstream)) | set(t.downstream)
        after = activate(after, sorted(t.downstream), inputs, prev, bits, new_sit)
        results.append((new_sit, after))
    return results


def flow_oracle(
    flow: NormalizedFlow,
    g: Grafcet,
    bounds: tuple[int, int] = (0, 3),
    state_cap: int = 1_000_000,
    domains: Optional[dict[str, tuple[int, ...]]] = None,
) -> OracleResult:
    """Concrete execution of the normalized flow as a sequential program, to saturation.

    A state is one flow node plus a store; untracked variables and all edge and
    step atoms are re-chosen freely whenever a guard or value is evaluated.
    Only meaningful for partials without parallel branches.
    """
    p = flow.partial
    tracked = tracked_variables(p, g)
    index = {n: i for i, n in enumerate(tracked)}
    sorts = {v.name: v.sort for v in g.variables}
    names, values, _ = _nondeterminism(p, g, tracked, bounds, domains)
    atoms = sorted(
        {n for e in _partial_exprs(p) for n in ex.walk(e) if isinstance(n, (ex.EdgeAtom, ex.StepRef))}, key=repr
    )
    choices = [
        (dict(zip(names, vals)), dict(zip(atoms, bits)))
        for vals in itertools.product(*values)
        for bits in itertools.product((0, 1), repeat=len(atoms))
    ]

    def evaluators(store):
        for inputs, bits in choices:
            lookup = lambda n, inputs=inputs: store[index[n]] if n in index else inputs[n]
            yield lambda e, lookup=lookup, bits=bits: ex.evaluate(
                e, lookup, lambda r: bool(bits[r]), lambda a: bool(bits[a])
            )

    def assign(store, target, value_expr, guard=None):
        out = set()
        for ev in evaluators(store):
            if guard is not None and not ev(guard):
                continue
            value = ev(value_expr)
            if sorts.get(target) == BOOL and value not in (0, 1):
                continue
            updated = list(store)
            updated[index[target]] = value
            out.add(tuple(updated))
        return out

    def step_out(node, store):
        stores = {store}
        for a in flow.activation_effects(node.step):
            stores = {s2 for s in stores for s2 in assign(s, a.target, a.value)}
        return stores

    seen: dict[str, set] = {n.id: set() for n in flow.nodes if not isinstance(n, ActionNode)}
    zero = tuple(0 for _ in tracked)
    frontier = deque((n, zero) for n in sorted(flow.entries, key=lambda n: n.step))
    visited = set(frontier)
    while frontier:
        node, store = frontier.popleft()
        if node.id in seen:
            seen[node.id].add(store)
        if isinstance(node, StepNode):
            outs = step_out(node, store)
        elif isinstance(node, TransitionNode):
            cond = p.transition(node.tid).condition
            outs = {store} if any(ev(cond) for ev in evaluators(store)) else set()
        else:
            outs = assign(store, node.target, node.value, node.guard)
        for out in outs:
            for m in flow.succ[node]:
                if (m, out) not in visited:
                    visited.add((m, out))
                    if len(visited) > state_cap:
                        raise StateCapExceeded(f"STATE_CAP: more than {state_cap} states in {p.name}")
                    frontier.append((m, out))
    return OracleResult(tracked, seen, len(visited))
