"""Interval lattice, abstract environments and the transfer primitives."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Union

from . import expr as ex

INF = math.inf
Bound = Union[int, float]

StepResolver = Callable[[ex.StepRef], Optional[bool]]


def _no_steps(ref: ex.StepRef) -> Optional[bool]:
    return None


@dataclass(frozen=True)
class Interval:
    """Integer interval ``[lo, hi]``; bounds may be ``-inf``/``+inf``.

    Any ``lo > hi`` is normalized to the canonical empty interval (bottom).
    """

    lo: Bound
    hi: Bound

    def __post_init__(self):
        if self.lo > self.hi:
            object.__setattr__(self, "lo", INF)
            object.__setattr__(self, "hi", -INF)

    @classmethod
    def const(cls, value: int) -> "Interval":
        return cls(value, value)

    @property
    def is_bottom(self) -> bool:
        return self.lo > self.hi

    @property
    def is_top(self) -> bool:
        return self.lo == -INF and self.hi == INF

    def __contains__(self, value: int) -> bool:
        return self.lo <= value <= self.hi

    def join(self, other: "Interval") -> "Interval":
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def meet(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))

    def leq(self, other: "Interval") -> bool:
        if self.is_bottom:
            return True
        if other.is_bottom:
            return False
        return other.lo <= self.lo and self.hi <= other.hi

    def widen(self, new: "Interval") -> "Interval":
        if self.is_bottom:
            return new
        if new.is_bottom:
            return self
        lo = -INF if new.lo < self.lo else self.lo
        hi = INF if new.hi > self.hi else self.hi
        return Interval(lo, hi)

    def __add__(self, other: "Interval") -> "Interval":
        if self.is_bottom or other.is_bottom:
            return BOTTOM
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "Interval") -> "Interval":
        if self.is_bottom or other.is_bottom:
            return BOTTOM
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        if self.is_bottom or other.is_bottom:
            return BOTTOM
        products = [_mul(a, b) for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return Interval(min(products), max(products))

    def __str__(self) -> str:
        if self.is_bottom:
            return "bottom"
        return f"[{_fmt(self.lo)},{_fmt(self.hi)}]"

    def to_json(self):
        if self.is_bottom:
            return "bottom"
        return [_json_bound(self.lo), _json_bound(self.hi)]


def _mul(a: Bound, b: Bound) -> Bound:
    # 0 * inf is 0 for interval bounds
    if a == 0 or b == 0:
        return 0
    return a * b


def _fmt(b: Bound) -> str:
    if b == INF:
        return "+inf"
    if b == -INF:
        return "-inf"
    return str(int(b))


def _json_bound(b: Bound):
    return _fmt(b) if math.isinf(b) else int(b)


BOTTOM = Interval(INF, -INF)
TOP = Interval(-INF, INF)
BOOL_RANGE = Interval(0, 1)
ZERO = Interval(0, 0)


def join(a: Interval, b: Interval) -> Interval:
    return a.join(b)


def meet(a: Interval, b: Interval) -> Interval:
    return a.meet(b)


def leq(a: Interval, b: Interval) -> bool:
    return a.leq(b)


def widen(old: Interval, new: Interval) -> Interval:
    return old.widen(new)


def sort_range(sort: Optional[str]) -> Interval:
    return BOOL_RANGE if sort == ex.BOOL else TOP


# -- environments ----------------------------------------------------------


class AbstractEnv:
    """One interval per tracked variable; bottom as soon as any interval is empty.

    ``sorts`` maps every declared variable (tracked or not) to its sort and is
    shared, not copied, between derived environments.
    """

    __slots__ = ("_values", "_bottom", "sorts")

    def __init__(self, values: Mapping[str, Interval], sorts: Mapping[str, str], bottom: bool = False):
        vals = dict(values)
        bottom = bottom or any(iv.is_bottom for iv in vals.values())
        if bottom:
            vals = {name: BOTTOM for name in vals}
        self._values = vals
        self._bottom = bottom
        self.sorts = sorts

    @classmethod
    def bottom(cls, names: Iterable[str], sorts: Mapping[str, str]) -> "AbstractEnv":
        return cls({name: BOTTOM for name in names}, sorts, bottom=True)

    @classmethod
    def constant(cls, names: Iterable[str], sorts: Mapping[str, str], value: int = 0) -> "AbstractEnv":
        return cls({name: Interval.const(value) for name in names}, sorts)

    @classmethod
    def top(cls, names: Iterable[str], sorts: Mapping[str, str]) -> "AbstractEnv":
        return cls({name: sort_range(sorts.get(name)) for name in names}, sorts)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._values)

    @property
    def is_bottom(self) -> bool:
        return self._bottom

    def __getitem__(self, name: str) -> Interval:
        return self._values[name]

    def __contains__(self, name: str) -> bool:
        return name in self._values

    def items(self):
        return self._values.items()

    def set(self, name: str, value: Interval) -> "AbstractEnv":
        if self._bottom:
            return self
        vals = dict(self._values)
        vals[name] = value
        return AbstractEnv(vals, self.sorts)

    def as_bottom(self) -> "AbstractEnv":
        return AbstractEnv.bottom(self._values, self.sorts)

    def join(self, other: "AbstractEnv") -> "AbstractEnv":
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        return AbstractEnv({n: iv.join(other[n]) for n, iv in self._values.items()}, self.sorts)

    def meet(self, other: "AbstractEnv") -> "AbstractEnv":
        if self.is_bottom:
            return self
        if other.is_bottom:
            return other
        return AbstractEnv({n: iv.meet(other[n]) for n, iv in self._values.items()}, self.sorts)

    def leq(self, other: "AbstractEnv") -> bool:
        if self.is_bottom:
            return True
        if other.is_bottom:
            return False
        return all(iv.leq(other[n]) for n, iv in self._values.items())

    def widen(self, new: "AbstractEnv") -> "AbstractEnv":
        """Pointwise widening, clamped to each variable's sort range."""
        if self.is_bottom:
            return new
        if new.is_bottom:
            return self
        return AbstractEnv(
            {
                n: iv.widen(new[n]).meet(sort_range(self.sorts.get(n)))
                for n, iv in self._values.items()
            },
            self.sorts,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, AbstractEnv):
            return NotImplemented
        if self.is_bottom or other.is_bottom:
            return self.is_bottom == other.is_bottom
        return self._values == other._values

    def __hash__(self):
        return hash(None if self.is_bottom else tuple(sorted(self._values.items())))

    def __repr__(self) -> str:
        if self.is_bottom:
            return "AbstractEnv(bottom)"
        body = ", ".join(f"{n}={iv}" for n, iv in self._values.items())
        return f"AbstractEnv({body})"

    def contains_store(self, store: Mapping[str, int]) -> bool:
        """Concretization membership for the tracked variables present in ``store``."""
        if self.is_bottom:
            return False
        return all(store[n] in iv for n, iv in self._values.items() if n in store)


# -- transfer primitives ---------------------------------------------------


def eval_arith(e: ex.Expr, env: AbstractEnv, steps: StepResolver = _no_steps) -> Interval:
    """Sound interval for the value of ``e`` under ``env``.

    Untracked variables range over their sort; Boolean sub-expressions give
    ``[0,0]``, ``[1,1]`` or ``[0,1]`` depending on what ``env`` decides.
    """
    if env.is_bottom:
        return BOTTOM
    if isinstance(e, ex.IntConst):
        return Interval.const(e.value)
    if isinstance(e, ex.BoolConst):
        return Interval.const(int(e.value))
    if isinstance(e, ex.VarRef):
        if e.name in env:
            return env[e.name]
        return sort_range(env.sorts.get(e.name))
    if isinstance(e, ex.StepRef):
        truth = steps(e)
        return BOOL_RANGE if truth is None else Interval.const(int(truth))
    if isinstance(e, ex.EdgeAtom):
        return BOOL_RANGE
    if isinstance(e, ex.Arith):
        a = eval_arith(e.lhs, env, steps)
        b = eval_arith(e.rhs, env, steps)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        return a * b
    may_true = not filter(env, e, steps).is_bottom
    may_false = not filter(env, ex.Not(e), steps).is_bottom
    return Interval(0 if may_false else 1, 1 if may_true else 0)


def filter(env: AbstractEnv, cond: ex.Expr, steps: StepResolver = _no_steps) -> AbstractEnv:
    """Restrict ``env`` to the states in which ``cond`` may hold.

    Conjunction meets and disjunction joins the filtered environments; edge
    atoms and undecided step atoms leave ``env`` unchanged.
    """
    if env.is_bottom:
        return env
    return _filter(env, ex.push_negations(cond), steps)


def _filter(env: AbstractEnv, c: ex.Expr, steps: StepResolver) -> AbstractEnv:
    if env.is_bottom:
        return env
    if isinstance(c, ex.BoolConst):
        return env if c.value else env.as_bottom()
    if isinstance(c, ex.And):
        return _filter(env, c.lhs, steps).meet(_filter(env, c.rhs, steps))
    if isinstance(c, ex.Or):
        return _filter(env, c.lhs, steps).join(_filter(env, c.rhs, steps))
    if isinstance(c, ex.Compare):
        return _filter_compare(env, c, steps)
    negated = isinstance(c, ex.Not)
    atom = c.operand if negated else c
    if isinstance(atom, ex.StepRef):
        truth = steps(atom)
        if truth is None or truth != negated:
            return env
        return env.as_bottom()
    if isinstance(atom, ex.EdgeAtom):
        return env
    raise TypeError(f"unexpected condition atom {c!r}")


def _may_hold(op: str, a: Interval, b: Interval) -> bool:
    if op == "=":
        return not a.meet(b).is_bottom
    if op == "!=":
        return not (a.lo == a.hi == b.lo == b.hi)
    if op == "<":
        return a.lo < b.hi
    if op == "<=":
        return a.lo <= b.hi
    if op == ">":
        return a.hi > b.lo
    return a.hi >= b.lo


def _refine(current: Interval, op: str, other: Interval) -> Interval:
    """Values ``x`` of ``current`` for which some ``y`` in ``other`` has ``x op y``."""
    if op == "=":
        return current.meet(other)
    if op == "<":
        return current.meet(Interval(-INF, other.hi - 1))
    if op == "<=":
        return current.meet(Interval(-INF, other.hi))
    if op == ">":
        return current.meet(Interval(other.lo + 1, INF))
    if op == ">=":
        return current.meet(Interval(other.lo, INF))
    # "!=" only excludes a value when the other side is a single point
    if other.lo != other.hi or current.is_bottom:
        return current
    lo, hi = current.lo, current.hi
    if lo == other.lo:
        lo += 1
    if hi == other.lo:
        hi -= 1
    return Interval(lo, hi)


def _filter_compare(env: AbstractEnv, c: ex.Compare, steps: StepResolver) -> AbstractEnv:
    left = eval_arith(c.lhs, env, steps)
    right = eval_arith(c.rhs, env, steps)
    if left.is_bottom or right.is_bottom or not _may_hold(c.op, left, right):
        return env.as_bottom()
    out = env
    if isinstance(c.lhs, ex.VarRef) and c.lhs.name in env:
        out = out.set(c.lhs.name, _refine(out[c.lhs.name], c.op, right))
    if isinstance(c.rhs, ex.VarRef) and c.rhs.name in env and not out.is_bottom:
        out = out.set(c.rhs.name, _refine(out[c.rhs.name], ex.MIRRORED_COMPARE[c.op], left))
    return out


def assign(
    env: AbstractEnv, target: str, value: ex.Expr, steps: StepResolver = _no_steps
) -> AbstractEnv:
    """Bind ``target`` to the interval of ``value``, cut to the target's sort range.

    A Boolean target assigned a value outside ``[0,1]`` makes the result bottom.
    """
    if env.is_bottom:
        return env
    result = eval_arith(value, env, steps).meet(sort_range(env.sorts.get(target)))
    return env.set(target, result)
