import itertools

import pytest

from grafcet_analyzer import expr as ex
from grafcet_analyzer.model import OnActivation, OnEvent, Stored

X, Y, Z, W = (ex.VarRef(n) for n in "XYZW")


def c(op, lhs, rhs):
    return ex.Compare(op, lhs, rhs)


def test_free_vars_examples():
    assert ex.free_vars(ex.EdgeAtom("rising", ex.VarRef("x"))) == {"x"}
    cond = ex.And(c("=", ex.VarRef("k2"), ex.IntConst(3)), ex.Not(ex.VarRef("fault")))
    assert ex.free_vars(cond) == {"k2", "fault"}
    assert ex.free_vars(ex.IntConst(0)) == frozenset()


def test_step_refs_and_edges():
    e = ex.Or(ex.StepRef("G", 2), ex.EdgeAtom("falling", X))
    assert ex.step_refs(e) == {ex.StepRef("G", 2)}
    assert ex.has_edge(e)
    assert not ex.has_edge(ex.StepRef("G", 2))


def test_push_negations_de_morgan():
    got = ex.push_negations(ex.Not(ex.And(X, ex.Not(Y))))
    assert got == ex.Or(c("=", X, ex.IntConst(0)), c("=", Y, ex.IntConst(1)))


def test_push_negations_flips_comparison():
    k = ex.VarRef("k")
    assert ex.push_negations(ex.Not(c("<=", k, ex.IntConst(2)))) == c(">", k, ex.IntConst(2))


def test_push_negations_keeps_negated_edge():
    edge = ex.EdgeAtom("rising", ex.VarRef("x"))
    assert ex.push_negations(ex.Not(edge)) == ex.Not(edge)


def test_push_negations_folds_constants():
    assert ex.push_negations(ex.Not(ex.TRUE)) == ex.FALSE
    assert ex.push_negations(ex.Not(ex.IntConst(0))) == ex.TRUE


def _random_conditions():
    atoms = [X, Y, ex.Not(Z), c("<", X, W), ex.StepRef("G", 1), ex.EdgeAtom("rising", Y)]
    out = list(atoms)
    for a, b in itertools.product(atoms[:4], repeat=2):
        out.append(ex.Not(ex.And(a, ex.Or(b, ex.Not(a)))))
        out.append(ex.Or(ex.Not(ex.Or(a, b)), ex.And(ex.Not(b), a)))
    out.append(ex.Not(ex.Not(ex.And(atoms[4], ex.Not(atoms[5])))))
    return out


def _no_not_above_non_atom(e) -> bool:
    for node in ex.walk(e):
        if isinstance(node, ex.Not) and not isinstance(node.operand, (ex.StepRef, ex.EdgeAtom)):
            return False
    return True


@pytest.mark.parametrize("cond", _random_conditions(), ids=repr)
def test_push_negations_preserves_semantics(cond):
    pushed = ex.push_negations(cond)
    assert _no_not_above_non_atom(pushed)
    for x, y, z, w, step, edge in itertools.product((0, 1), repeat=6):
        env = {"X": x, "Y": y, "Z": z, "W": w}
        args = (env.__getitem__, lambda r: bool(step), lambda a: bool(edge))
        assert ex.evaluate(cond, *args) == ex.evaluate(pushed, *args)


def test_depends_on_examples():
    x_zero = Stored("x", ex.IntConst(0), OnActivation())
    x_inc = Stored("x", ex.Arith("+", ex.VarRef("x"), ex.IntConst(1)), OnActivation())
    y_one = Stored("y", ex.IntConst(1), OnActivation())
    y_from_x = Stored("y", ex.VarRef("x"), OnActivation())
    assert ex.depends_on(x_zero, x_inc)
    assert not ex.depends_on(x_zero, y_one)
    assert ex.depends_on(x_zero, y_from_x)


def test_depends_on_reads_event_condition():
    a = Stored("x", ex.IntConst(0), OnActivation())
    b = Stored("y", ex.IntConst(1), OnEvent(c(">", ex.VarRef("x"), ex.IntConst(2))))
    assert ex.depends_on(a, b)


def test_depends_on_is_symmetric():
    actions = [
        Stored("x", ex.IntConst(0), OnActivation()),
        Stored("x", ex.Arith("+", ex.VarRef("x"), ex.IntConst(1)), OnActivation()),
        Stored("y", ex.IntConst(1), OnActivation()),
        Stored("y", ex.VarRef("x"), OnActivation()),
        Stored("z", ex.IntConst(2), OnEvent(ex.VarRef("y"))),
    ]
    for a, b in itertools.product(actions, repeat=2):
        assert ex.depends_on(a, b) == ex.depends_on(b, a)


def test_evaluate_arithmetic_and_comparison():
    e = c(">=", ex.Arith("*", X, ex.Arith("-", Y, ex.IntConst(1))), ex.IntConst(4))
    assert ex.evaluate(e, {"X": 2, "Y": 3}.__getitem__) == 1
    assert ex.evaluate(e, {"X": 2, "Y": 2}.__getitem__) == 0


def test_sort_errors():
    sorts = {"b": ex.BOOL, "n": ex.INT}.get
    assert ex.sort_errors(ex.And(ex.VarRef("b"), c("<", ex.VarRef("n"), ex.IntConst(3))), sorts, ex.BOOL) == []
    assert ex.sort_errors(ex.VarRef("n"), sorts, ex.BOOL)
    assert ex.sort_errors(ex.Arith("+", ex.VarRef("n"), ex.IntConst(1)), sorts, ex.BOOL)
    assert ex.sort_errors(ex.IntConst(3), sorts, ex.BOOL)
    assert ex.sort_errors(ex.IntConst(1), sorts, ex.BOOL) == []
