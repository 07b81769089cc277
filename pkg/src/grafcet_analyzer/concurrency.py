"""Structural checks that a partial Grafcet behaves like a sequential program.

A partial passes when none of its steps can execute dependent actions
concurrently; only then is the control-flow analysis sound for it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from . import expr as ex
from .model import Forcing, Grafcet, PartialGrafcet, Stored

INTRA_STEP_DEP = "INTRA_STEP_DEP"
MULTI_INITIAL = "MULTI_INITIAL"
SOURCE_TRANSITION = "SOURCE_TRANSITION"
PARALLEL_WRITE = "PARALLEL_WRITE"
CROSS_PARTIAL_WRITE = "CROSS_PARTIAL_WRITE"
FORCED_MULTI = "FORCED_MULTI"

ConcurrentStepSets = dict[int, frozenset[int]]


@dataclass(frozen=True, order=True)
class ConcurrencyViolation:
    rule: str
    partials: tuple[str, ...]
    ids: tuple[str, ...]
    note: str = field(default="", compare=False)

    def __str__(self) -> str:
        return f"{self.rule} [{', '.join(self.ids)}]: {self.note}"


@dataclass
class ConcurrencyReport:
    violations: list[ConcurrencyViolation]
    partials: dict[str, bool]

    @property
    def passed(self) -> bool:
        return not self.violations

    def partial_passed(self, name: str) -> bool:
        return self.partials.get(name, True)


def _stored_pairs(actions):
    stored = [a for a in actions if isinstance(a, Stored)]
    return itertools.combinations(stored, 2)


def check_intra_step(p: PartialGrafcet) -> list[ConcurrencyViolation]:
    out = []
    for s in p.steps:
        dependent = [(a, b) for a, b in _stored_pairs(s.actions) if ex.depends_on(a, b)]
        if dependent:
            names = sorted({v for a, b in dependent for v in (a.target, b.target)})
            out.append(
                ConcurrencyViolation(
                    INTRA_STEP_DEP,
                    (p.name,),
                    (f"{p.name}.{s.id}",),
                    f"step {s.id} has {len(dependent)} pair(s) of dependent stored actions on {', '.join(names)}",
                )
            )
    return out


def check_entry_multiplicity(g: Grafcet) -> list[ConcurrencyViolation]:
    out = []
    for p in g.partials:
        for label, steps in (("initial", p.initial_steps), ("marked", p.marked_steps)):
            if len(steps) > 1:
                out.append(
                    ConcurrencyViolation(
                        MULTI_INITIAL,
                        (p.name,),
                        tuple(f"{p.name}.{s}" for s in sorted(steps)),
                        f"partial {p.name} has {len(steps)} {label} steps",
                    )
                )
        for s in p.steps:
            for a in s.actions:
                if isinstance(a, Forcing) and a.explicit is not None and len(a.explicit) > 1:
                    out.append(
                        ConcurrencyViolation(
                            FORCED_MULTI,
                            (a.target_partial,),
                            (f"{p.name}.{s.id}",),
                            f"forcing order into {a.target_partial} activates {len(a.explicit)} steps",
                        )
                    )
    return out


def check_source_transitions(p: PartialGrafcet) -> list[ConcurrencyViolation]:
    return [
        ConcurrencyViolation(
            SOURCE_TRANSITION, (p.name,), (f"{p.name}.{t.id}",), f"transition {t.id} has no upstream step"
        )
        for t in p.transitions
        if not t.upstream
    ]


def concurrent_steps(p: PartialGrafcet, g: Optional[Grafcet] = None) -> ConcurrentStepSets:
    """Over-approximate which pairs of steps can be active at the same time.

    Pairs are seeded from the initial, marked and forced situations and closed
    under transition firing: when the upstream steps of ``t`` may all be active
    together, its downstream steps are mutually concurrent and inherit every
    step concurrent with the whole upstream set. Conditions are ignored, so the
    result covers every reachable marking.
    """
    ids = p.step_ids
    conc: dict[int, set[int]] = {s: set() for s in ids}

    def add(a: int, b: int) -> bool:
        if a == b or b in conc[a]:
            return False
        conc[a].add(b)
        conc[b].add(a)
        return True

    seeds = [p.initial_steps, p.marked_steps]
    if g is not None:
        for other in g.partials:
            for s in other.steps:
                for a in s.actions:
                    if isinstance(a, Forcing) and a.target_partial == p.name and a.explicit:
                        seeds.append(frozenset(a.explicit) & set(ids))
    for seed in seeds:
        for a, b in itertools.combinations(sorted(seed), 2):
            add(a, b)

    changed = True
    while changed:
        changed = False
        for t in p.transitions:
            up = t.upstream
            if any(b not in conc[a] for a, b in itertools.combinations(up, 2)):
                continue
            for a, b in itertools.combinations(t.downstream, 2):
                changed |= add(a, b)
            companions = [x for x in ids if x not in up and all(x in conc[u] for u in up)]
            for x in companions:
                for d in t.downstream:
                    changed |= add(x, d)
    return {s: frozenset(others) for s, others in conc.items()}


def check_parallel_writes(p: PartialGrafcet, cs: ConcurrentStepSets) -> list[ConcurrencyViolation]:
    """Dependent stored actions on concurrent steps, and transition guards racing a write."""
    out = []
    for s1, s2 in itertools.combinations(p.steps, 2):
        if s2.id not in cs.get(s1.id, ()):
            continue
        for a in s1.stored():
            for b in s2.stored():
                if not ex.depends_on(a, b):
                    continue
                kind = "write the same variable" if a.target == b.target else "race on a read/write"
                out.append(
                    ConcurrencyViolation(
                        PARALLEL_WRITE,
                        (p.name,),
                        (f"{p.name}.{s1.id}", f"{p.name}.{s2.id}"),
                        f"concurrent steps {s1.id} and {s2.id} {kind} ({a.target}, {b.target})",
                    )
                )
    writers: dict[str, list[int]] = {}
    for s in p.steps:
        for a in s.stored():
            writers.setdefault(a.target, []).append(s.id)
    for t in p.transitions:
        if not t.upstream:
            continue
        for var in sorted(ex.free_vars(t.condition)):
            for w in sorted(set(writers.get(var, ()))):
                if all(w in cs.get(u, ()) for u in t.upstream):
                    out.append(
                        ConcurrencyViolation(
                            PARALLEL_WRITE,
                            (p.name,),
                            (f"{p.name}.{t.id}", f"{p.name}.{w}"),
                            f"condition of {t.id} reads {var}, written by concurrent step {w}",
                        )
                    )
    return out


def check_cross_partial(g: Grafcet) -> list[ConcurrencyViolation]:
    writers: dict[str, set[str]] = {}
    for p in g.partials:
        for var in p.stored_targets():
            writers.setdefault(var, set()).add(p.name)
    return [
        ConcurrencyViolation(
            CROSS_PARTIAL_WRITE,
            tuple(sorted(names)),
            tuple(sorted(names)),
            f"{var} is written by stored actions in {', '.join(sorted(names))}",
        )
        for var, names in sorted(writers.items())
        if len(names) > 1
    ]


def gate(g: Grafcet) -> ConcurrencyReport:
    violations: list[ConcurrencyViolation] = []
    violations += check_entry_multiplicity(g)
    for p in g.partials:
        violations += check_intra_step(p)
        violations += check_source_transitions(p)
        violations += check_parallel_writes(p, concurrent_steps(p, g))
    violations += check_cross_partial(g)
    violations.sort()
    failed = {name for v in violations for name in v.partials}
    return ConcurrencyReport(violations, {p.name: p.name not in failed for p in g.partials})
