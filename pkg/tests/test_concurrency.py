import itertools
import random

import pytest

from grafcet_analyzer import expr as ex
from grafcet_analyzer.concurrency import (
    CROSS_PARTIAL_WRITE,
    FORCED_MULTI,
    INTRA_STEP_DEP,
    MULTI_INITIAL,
    PARALLEL_WRITE,
    SOURCE_TRANSITION,
    check_cross_partial,
    check_entry_multiplicity,
    check_intra_step,
    check_parallel_writes,
    check_source_transitions,
    concurrent_steps,
    gate,
)
from grafcet_analyzer.model import (
    Continuous,
    Forcing,
    Grafcet,
    OnActivation,
    OnDeactivation,
    OnEvent,
    PartialGrafcet,
    Step,
    Stored,
    Transition,
    VariableDecl,
    entry_nodes,
)

from conftest import load

INC = ex.Arith("+", ex.VarRef("x"), ex.IntConst(1))


def reachable_markings(p: PartialGrafcet, g=None):
    """Brute-force marking graph; conditions are free, alternative branches exclusive.

    Any set of enabled transitions with pairwise disjoint upstream steps may
    fire together; activation wins over deactivation.
    """
    entries = entry_nodes(p, g)
    starts = {frozenset(entries.regular)}
    if g is not None:
        for other in g.partials:
            for s in other.steps:
                for a in s.actions:
                    if isinstance(a, Forcing) and a.target_partial == p.name and a.explicit:
                        starts.add(frozenset(a.explicit))
    seen = set(starts)
    todo = list(starts)
    while todo:
        m = todo.pop()
        enabled = [t for t in p.transitions if set(t.upstream) <= m]
        for k in range(1, len(enabled) + 1):
            for group in itertools.combinations(enabled, k):
                ups = [set(t.upstream) for t in group]
                if any(a & b for a, b in itertools.combinations(ups, 2)):
                    continue
                off = set().union(*ups)
                on = set().union(*(set(t.downstream) for t in group))
                nxt = frozenset((m - off) | on)
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
    return seen


def concurrent_pairs(markings):
    return {frozenset(pair) for m in markings for pair in itertools.combinations(sorted(m), 2)}


def computed_pairs(cs):
    return {frozenset((a, b)) for a, others in cs.items() for b in others}


def chain(*transitions, initial=(1,), marked=()):
    ids = sorted({s for t in transitions for s in (*t[1], *t[2])} | set(initial) | set(marked))
    steps = tuple(Step(s, initial=s in initial, marked=s in marked) for s in ids)
    return PartialGrafcet("P", steps, tuple(Transition(*t) for t in transitions))


def test_sequential_chain_has_no_concurrency():
    p = chain(("t1", (1,), (2,)), ("t2", (2,), (3,)), ("t3", (3,), (1,)))
    assert all(not v for v in concurrent_steps(p).values())


def test_split_join_diamond():
    p = chain(("t1", (1,), (2, 3)), ("t2", (2,), (4,)), ("t3", (3,), (5,)), ("t4", (4, 5), (6,)), ("t5", (6,), (1,)))
    cs = concurrent_steps(p)
    expected = concurrent_pairs(reachable_markings(p))
    assert computed_pairs(cs) == expected
    assert cs[1] == frozenset() and cs[6] == frozenset()
    assert cs[2] == {3, 5}


def test_g6_branches_concurrent():
    p = load("g6.grafcet").partials[0]
    cs = concurrent_steps(p)
    assert cs[2] == {3} and cs[3] == {2} and cs[1] == frozenset()


def test_relation_symmetric_and_irreflexive():
    for name in ["soundness.grafcet", "g4.grafcet", "g6.grafcet", "plant.grafcet"]:
        g = load(name)
        for p in g.partials:
            cs = concurrent_steps(p, g)
            for s, others in cs.items():
                assert s not in others
                for o in others:
                    assert s in cs[o]


def _random_partial(rng: random.Random, n_steps: int) -> PartialGrafcet:
    ids = list(range(1, n_steps + 1))
    transitions = []
    for k in range(rng.randint(n_steps - 1, n_steps + 3)):
        up = tuple(sorted(rng.sample(ids, min(n_steps, rng.choice([1, 1, 1, 2])))))
        down = tuple(sorted(rng.sample(ids, min(n_steps, rng.choice([0, 1, 1, 1, 2, 2, 3])))))
        transitions.append(Transition(f"t{k}", up, down))
    initial = set(rng.sample(ids, min(n_steps, rng.choice([1, 1, 1, 2]))))
    steps = tuple(Step(s, initial=s in initial) for s in ids)
    return PartialGrafcet("R", steps, tuple(transitions))


@pytest.mark.parametrize("seed", range(200))
def test_concurrent_steps_over_approximates_markings(seed):
    rng = random.Random(seed)
    p = _random_partial(rng, rng.randint(2, 8))
    observed = concurrent_pairs(reachable_markings(p))
    assert observed <= computed_pairs(concurrent_steps(p))


def test_forced_situation_seeds_concurrency():
    target = chain(("t1", (1,), (2,)), ("t2", (2,), (3,)), ("t3", (3,), (1,)))
    src = PartialGrafcet("S", (Step(9, initial=True, actions=(Forcing("P", (1, 3)),)),))
    g = Grafcet((), (src, target))
    cs = concurrent_steps(target, g)
    assert concurrent_pairs(reachable_markings(target, g)) <= computed_pairs(cs)
    assert 3 in cs[1]


# -- individual checks --


def test_intra_step_examples():
    g1 = load("g1.grafcet").partials[0]
    assert [v.rule for v in check_intra_step(g1)] == [INTRA_STEP_DEP]
    independent = PartialGrafcet(
        "P",
        (Step(1, True, actions=(Stored("x", ex.IntConst(0), OnActivation()), Stored("y", ex.IntConst(1), OnActivation()))),),
    )
    assert check_intra_step(independent) == []
    read_after_write = PartialGrafcet(
        "P",
        (Step(1, True, actions=(Stored("x", ex.IntConst(0), OnActivation()), Stored("z", ex.VarRef("x"), OnDeactivation()))),),
    )
    assert [v.rule for v in check_intra_step(read_after_write)] == [INTRA_STEP_DEP]


def test_entry_multiplicity_examples():
    for name in ["g2.grafcet", "g3.grafcet"]:
        assert MULTI_INITIAL in [v.rule for v in check_entry_multiplicity(load(name))]
    assert check_entry_multiplicity(load("fig2.grafcet")) == []
    assert [v.rule for v in check_entry_multiplicity(load("forced_multi.grafcet"))] == [FORCED_MULTI]


def test_source_transition_examples():
    assert [v.rule for v in check_source_transitions(load("g5.grafcet").partials[0])] == [SOURCE_TRANSITION]
    assert check_source_transitions(load("fig2.grafcet").partials[0]) == []
    sink = chain(("t1", (1,), (2,)), ("t2", (2,), ()))
    assert check_source_transitions(sink) == []


def test_parallel_write_examples():
    p = load("g6.grafcet").partials[0]
    assert [v.rule for v in check_parallel_writes(p, concurrent_steps(p))] == [PARALLEL_WRITE]
    p = load("g4.grafcet").partials[0]
    assert PARALLEL_WRITE in [v.rule for v in check_parallel_writes(p, concurrent_steps(p))]
    g = load("soundness.grafcet")
    split = g.partial("Split")
    assert check_parallel_writes(split, concurrent_steps(split, g)) == []


def test_guard_racing_a_concurrent_write():
    p = PartialGrafcet(
        "P",
        (
            Step(1, True),
            Step(2, actions=(Stored("x", INC, OnEvent(ex.VarRef("a"))),)),
            Step(3),
            Step(4),
        ),
        (
            Transition("split", (1,), (2, 3)),
            Transition("race", (3,), (4,), ex.Compare(">", ex.VarRef("x"), ex.IntConst(2))),
            Transition("join", (2, 4), (1,)),
        ),
    )
    found = check_parallel_writes(p, concurrent_steps(p))
    assert [v.ids for v in found] == [("P.race", "P.2")]


def test_cross_partial_examples():
    assert [v.rule for v in check_cross_partial(load("g7_g8.grafcet"))] == [CROSS_PARTIAL_WRITE]
    assert check_cross_partial(load("soundness.grafcet")) == []
    v = (VariableDecl("lamp", "output", "bool"),)
    a = PartialGrafcet("A", (Step(1, True, actions=(Continuous("lamp"),)),))
    b = PartialGrafcet("B", (Step(1, True, actions=(Continuous("lamp"),)),))
    assert check_cross_partial(Grafcet(v, (a, b))) == []


# -- the gate --

DESIGNATED = {
    "g1.grafcet": INTRA_STEP_DEP,
    "g2.grafcet": MULTI_INITIAL,
    "g3.grafcet": MULTI_INITIAL,
    "g4.grafcet": PARALLEL_WRITE,
    "g5.grafcet": SOURCE_TRANSITION,
    "g6.grafcet": PARALLEL_WRITE,
    "g7_g8.grafcet": CROSS_PARTIAL_WRITE,
}


@pytest.mark.parametrize("name,rule", sorted(DESIGNATED.items()))
def test_gate_rejects_concurrent_structures(name, rule):
    report = gate(load(name))
    assert not report.passed
    assert rule in {v.rule for v in report.violations}


@pytest.mark.parametrize("name", ["fig2.grafcet", "g20.grafcet", "soundness.grafcet", "plant.grafcet"])
def test_gate_accepts_sequential_models(name):
    assert gate(load(name)).passed


def test_gate_is_union_of_checks():
    for name in list(DESIGNATED) + ["forced_multi.grafcet", "soundness.grafcet"]:
        g = load(name)
        parts = check_entry_multiplicity(g) + check_cross_partial(g)
        for p in g.partials:
            parts += check_intra_step(p) + check_source_transitions(p)
            parts += check_parallel_writes(p, concurrent_steps(p, g))
        report = gate(g)
        assert report.violations == sorted(parts)
        assert report.passed == (not parts)


def test_gate_marks_failing_partials_only():
    report = gate(load("g7_g8.grafcet"))
    assert report.partial_passed("G0")
    assert not report.partial_passed("G7") and not report.partial_passed("G8")
