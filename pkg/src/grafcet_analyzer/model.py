"""In-memory Grafcet model and its structural validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

from . import expr as ex

INPUT, INTERNAL, OUTPUT = "input", "internal", "output"
BOOL, INT = ex.BOOL, ex.INT


@dataclass(frozen=True)
class VariableDecl:
    name: str
    kind: str  # input | internal | output
    sort: str  # bool | int


# -- actions ---------------------------------------------------------------


@dataclass(frozen=True)
class OnActivation:
    pass


@dataclass(frozen=True)
class OnDeactivation:
    pass


@dataclass(frozen=True)
class OnEvent:
    condition: ex.Expr


Trigger = Union[OnActivation, OnDeactivation, OnEvent]


@dataclass(frozen=True)
class Continuous:
    target: str
    condition: ex.Expr = ex.TRUE


@dataclass(frozen=True)
class Stored:
    target: str
    value: ex.Expr
    trigger: Trigger


STAR = "*"
INIT = "init"


@dataclass(frozen=True)
class Forcing:
    """Forcing order; ``situation`` is ``"*"``, ``"init"`` or a tuple of step ids."""

    target_partial: str
    situation: Union[str, tuple[int, ...]]

    @property
    def explicit(self) -> Optional[tuple[int, ...]]:
        return self.situation if isinstance(self.situation, tuple) else None


Action = Union[Continuous, Stored, Forcing]


@dataclass(frozen=True)
class Step:
    id: int
    initial: bool = False
    marked: bool = False
    encloses: tuple[str, ...] = ()
    actions: tuple[Action, ...] = ()

    def stored(self, trigger_type=None) -> list[Stored]:
        return [
            a
            for a in self.actions
            if isinstance(a, Stored) and (trigger_type is None or isinstance(a.trigger, trigger_type))
        ]


@dataclass(frozen=True)
class Transition:
    id: str
    upstream: tuple[int, ...]
    downstream: tuple[int, ...]
    condition: ex.Expr = ex.TRUE


@dataclass(frozen=True)
class PartialGrafcet:
    name: str
    steps: tuple[Step, ...] = ()
    transitions: tuple[Transition, ...] = ()

    def step(self, sid: int) -> Step:
        for s in self.steps:
            if s.id == sid:
                return s
        raise KeyError(f"partial {self.name!r} has no step {sid}")

    def transition(self, tid: str) -> Transition:
        for t in self.transitions:
            if t.id == tid:
                return t
        raise KeyError(f"partial {self.name!r} has no transition {tid!r}")

    @property
    def step_ids(self) -> list[int]:
        return [s.id for s in self.steps]

    @property
    def initial_steps(self) -> frozenset[int]:
        return frozenset(s.id for s in self.steps if s.initial)

    @property
    def marked_steps(self) -> frozenset[int]:
        return frozenset(s.id for s in self.steps if s.marked)

    @property
    def enclosed(self) -> bool:
        return bool(self.marked_steps)

    def stored_targets(self) -> frozenset[str]:
        return frozenset(a.target for s in self.steps for a in s.stored())


@dataclass(frozen=True)
class Grafcet:
    variables: tuple[VariableDecl, ...] = ()
    partials: tuple[PartialGrafcet, ...] = ()

    def partial(self, name: str) -> PartialGrafcet:
        for p in self.partials:
            if p.name == name:
                return p
        raise KeyError(f"no partial Grafcet named {name!r}")

    def variable(self, name: str) -> Optional[VariableDecl]:
        for v in self.variables:
            if v.name == name:
                return v
        return None

    def sort_of(self, name: str) -> Optional[str]:
        decl = self.variable(name)
        return decl.sort if decl else None


# -- validation ------------------------------------------------------------


@dataclass(frozen=True, order=True)
class ModelError:
    rule: str
    element: str
    message: str = field(compare=False, default="")
    warning: bool = field(compare=False, default=False)

    def __str__(self) -> str:
        level = "warning" if self.warning else "error"
        return f"{level}: {self.rule} at {self.element}: {self.message}"


def _expressions(step: Step):
    for a in step.actions:
        if isinstance(a, Continuous):
            yield a.condition, BOOL
        elif isinstance(a, Stored):
            yield a.value, None
            if isinstance(a.trigger, OnEvent):
                yield a.trigger.condition, BOOL


def validate(g: Grafcet) -> list[ModelError]:
    """Collect every structural violation of ``g``, sorted by rule and element.

    Warnings (``warning=True``) do not make the model inadmissible.
    """
    errs: list[ModelError] = []
    add = lambda rule, elem, msg, warning=False: errs.append(ModelError(rule, elem, msg, warning))

    if not g.partials:
        add("NO_PARTIALS", "<grafcet>", "a Grafcet needs at least one partial Grafcet")

    seen: set[str] = set()
    for v in g.variables:
        if v.name in seen:
            add("DUPLICATE_VAR", v.name, "variable declared more than once")
        seen.add(v.name)

    partial_names = [p.name for p in g.partials]
    for name in sorted({n for n in partial_names if partial_names.count(n) > 1}):
        add("DUPLICATE_PARTIAL", name, "partial Grafcet declared more than once")
    known_partials = set(partial_names)

    continuous_writers: dict[str, set[str]] = {}
    stored_writers: dict[str, set[str]] = {}

    for p in g.partials:
        ids = p.step_ids
        for sid in sorted({i for i in ids if ids.count(i) > 1}):
            add("DUPLICATE_STEP", f"{p.name}.{sid}", "step id used more than once")
        tids = [t.id for t in p.transitions]
        for tid in sorted({i for i in tids if tids.count(i) > 1}):
            add("DUPLICATE_TRANSITION", f"{p.name}.{tid}", "transition id used more than once")
        step_set = set(ids)

        def check_expr(e: ex.Expr, where: str, expected: Optional[str]) -> None:
            for name in sorted(ex.free_vars(e)):
                if g.variable(name) is None:
                    add("UNDECLARED_VAR", where, f"variable {name!r} is not declared")
            for ref in ex.step_refs(e):
                if ref.partial not in known_partials:
                    add("UNKNOWN_PARTIAL", where, f"step reference into unknown partial {ref.partial!r}")
                elif ref.step not in g.partial(ref.partial).step_ids:
                    add("UNKNOWN_STEP", where, f"partial {ref.partial!r} has no step {ref.step}")
            if expected is not None:
                for problem in ex.sort_errors(e, g.sort_of, expected):
                    add("SORT_MISMATCH", where, problem)

        for s in p.steps:
            where = f"{p.name}.{s.id}"
            if s.initial and s.marked:
                add("INITIAL_AND_MARKED", where, "step is both initial and marked", warning=True)
            for enc in s.encloses:
                if enc == p.name:
                    add("SELF_ENCLOSURE", where, "a step cannot enclose its own partial Grafcet")
                elif enc not in known_partials:
                    add("UNKNOWN_PARTIAL", where, f"encloses unknown partial {enc!r}")
            for a in s.actions:
                if isinstance(a, Continuous):
                    decl = g.variable(a.target)
                    if decl is None:
                        add("UNDECLARED_VAR", where, f"variable {a.target!r} is not declared")
                    elif decl.kind != OUTPUT or decl.sort != BOOL:
                        add("CONT_TARGET", where, f"continuous action on {a.target!r}, which is not a Boolean output")
                    continuous_writers.setdefault(a.target, set()).add(p.name)
                elif isinstance(a, Stored):
                    decl = g.variable(a.target)
                    if decl is None:
                        add("UNDECLARED_VAR", where, f"variable {a.target!r} is not declared")
                    elif decl.kind == INPUT:
                        add("STORED_TARGET", where, f"stored action writes input variable {a.target!r}")
                    stored_writers.setdefault(a.target, set()).add(p.name)
                elif isinstance(a, Forcing):
                    if a.target_partial not in known_partials:
                        add("UNKNOWN_PARTIAL", where, f"forcing order on unknown partial {a.target_partial!r}")
                    elif a.explicit is not None:
                        target_ids = g.partial(a.target_partial).step_ids
                        for sid in a.explicit:
                            if sid not in target_ids:
                                add("FORCE_UNKNOWN_STEP", where, f"partial {a.target_partial!r} has no step {sid}")
            for e, expected in _expressions(s):
                check_expr(e, where, expected)

        for t in p.transitions:
            where = f"{p.name}.{t.id}"
            if not t.upstream and not t.downstream:
                add("EMPTY_TRANSITION", where, "transition has neither upstream nor downstream steps")
            for sid in (*t.upstream, *t.downstream):
                if sid not in step_set:
                    add("UNKNOWN_STEP", where, f"step {sid} does not exist in {p.name!r}")
            check_expr(t.condition, where, BOOL)

    for var in sorted(set(continuous_writers) & set(stored_writers)):
        add("CONT_STORED_OVERLAP", var, "variable written by both continuous and stored actions")

    return sorted(set(errs))


def errors_only(problems: list[ModelError]) -> list[ModelError]:
    return [e for e in problems if not e.warning]


# -- structural queries ----------------------------------------------------


def successors(p: PartialGrafcet, node: Union[int, str]) -> frozenset:
    """Steps map to the transitions they enable; transitions map to their downstream steps."""
    if isinstance(node, int):
        if node not in p.step_ids:
            raise KeyError(f"partial {p.name!r} has no step {node}")
        return frozenset(t.id for t in p.transitions if node in t.upstream)
    return frozenset(p.transition(node).downstream)


class Entries(NamedTuple):
    regular: frozenset[int]
    forced: frozenset[int]


def entry_nodes(p: PartialGrafcet, g: Optional[Grafcet] = None) -> Entries:
    """Steps where analysis of ``p`` starts.

    Marked steps if ``p`` is enclosed, initial steps otherwise. Steps that some
    explicit forcing order in ``g`` can force ``p`` into are returned as forced
    entries.
    """
    regular = p.marked_steps if p.enclosed else p.initial_steps
    forced: set[int] = set()
    if g is not None:
        for other in g.partials:
            for s in other.steps:
                for a in s.actions:
                    if isinstance(a, Forcing) and a.target_partial == p.name and a.explicit:
                        forced.update(a.explicit)
    return Entries(regular, frozenset(forced) & frozenset(p.step_ids))
