"""Expectation formulas: AST, parser, one-step progression and a finite-trace
evaluator.

Grammar (terms as in :mod:`ecexpect.terms`)::

    F ::= next(F) | eventually(F) | always(F) | never(F) | not(F)
        | and([F, ...]) | or([F, ...])
        | happ(Term) | happ(Actor, Action) | viol(F, F) | @label | Term

``never(F)`` is read as ``always(not(F))``. ``happ(Actor, Action)`` holds when
the event ``does(Actor, Action)`` occurs.

Progression returns a formula: :data:`TRUE` or :data:`FALSE` when the
expectation is resolved, otherwise the (simplified, constant-free) residual
that must hold from the next step on.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .terms import (
    Atom,
    Compound,
    ParseError,
    Term,
    TermParser,
    apply as apply_term,
    is_ground,
    match,
    mklist,
    named_variables,
)

__all__ = [
    "Formula",
    "Fluent",
    "Happ",
    "Label",
    "Viol",
    "Not",
    "And",
    "Or",
    "Next",
    "Eventually",
    "Always",
    "Const",
    "TRUE",
    "FALSE",
    "StepObservation",
    "parse_formula",
    "from_term",
    "to_term",
    "progress",
    "classify",
    "simplify",
    "trace_eval",
    "substitute",
    "formula_variables",
    "walk",
]

_RESERVED = {"next", "eventually", "always", "never", "not", "and", "or", "happ", "viol"}


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return str(to_term(self))


@dataclass(frozen=True, repr=False)
class Fluent(Formula):
    term: Term
    ground: bool = field(default=False, init=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "ground", is_ground(self.term, quoting=False))

    def __repr__(self):
        return f"Fluent({self.term})"


@dataclass(frozen=True, repr=False)
class Happ(Formula):
    event: Term
    actor: Optional[Term] = None
    pattern: Term = field(default=None, init=False, compare=False, hash=False)
    ground: bool = field(default=False, init=False, compare=False, hash=False)

    def __post_init__(self):
        pattern = self.event if self.actor is None else Compound("does", (self.actor, self.event))
        object.__setattr__(self, "pattern", pattern)
        object.__setattr__(self, "ground", is_ground(pattern, quoting=False))

    def __repr__(self):
        return f"Happ({self.event})" if self.actor is None else f"Happ({self.actor}, {self.event})"


@dataclass(frozen=True)
class Label(Formula):
    name: str


@dataclass(frozen=True)
class Viol(Formula):
    cond: Formula
    exp: Formula


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise ValueError("and() needs at least one operand")


@dataclass(frozen=True)
class Or(Formula):
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise ValueError("or() needs at least one operand")


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    arg: Formula


@dataclass(frozen=True)
class Always(Formula):
    arg: Formula


@dataclass(frozen=True)
class Const(Formula):
    value: bool


def _cache_hash(cls):
    # progression and trace evaluation key caches on formulas; recomputing a
    # dataclass hash walks the whole subtree every time
    names = tuple(f.name for f in fields(cls) if f.compare)

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((cls.__name__,) + tuple(getattr(self, n) for n in names))
            object.__setattr__(self, "_hash", h)
        return h

    cls.__hash__ = __hash__
    return cls


for _cls in (Fluent, Happ, Label, Viol, Not, And, Or, Next, Eventually, Always, Const):
    _cache_hash(_cls)

TRUE = Const(True)
FALSE = Const(False)


def Never(arg: Formula) -> Formula:  # noqa: N802
    return Always(Not(arg))


# --------------------------------------------------------------------------
# Term <-> formula
# --------------------------------------------------------------------------


def from_term(t: Term) -> Formula:
    if isinstance(t, Compound):
        f, args = t.functor, t.args
        if f == "@" and len(args) == 1 and isinstance(args[0], Atom):
            return Label(args[0].name)
        if len(args) == 1:
            unary = {"next": Next, "eventually": Eventually, "always": Always, "not": Not}
            if f in unary:
                return unary[f](from_term(args[0]))
            if f == "never":
                return Never(from_term(args[0]))
            if f in ("and", "or"):
                items = args[0]
                if not (isinstance(items, Compound) and items.functor == "[]"):
                    raise ValueError(f"{f}() takes a non-empty list, got {items}")
                ops = tuple(from_term(a) for a in items.args)
                return And(ops) if f == "and" else Or(ops)
            if f == "happ":
                return Happ(args[0])
        if f == "happ" and len(args) == 2:
            return Happ(args[1], actor=args[0])
        if f == "viol" and len(args) == 2:
            return Viol(from_term(args[0]), from_term(args[1]))
        if f in _RESERVED:
            raise ValueError(f"{f}/{len(args)} is not a formula constructor")
    return Fluent(t)


def to_term(f: Formula) -> Term:
    if isinstance(f, Fluent):
        return f.term
    if isinstance(f, Happ):
        return Compound("happ", (f.event,) if f.actor is None else (f.actor, f.event))
    if isinstance(f, Label):
        return Compound("@", (Atom(f.name),))
    if isinstance(f, Viol):
        return Compound("viol", (to_term(f.cond), to_term(f.exp)))
    if isinstance(f, (And, Or)):
        return Compound("and" if isinstance(f, And) else "or", (mklist(to_term(a) for a in f.args),))
    if isinstance(f, Const):
        return Atom("true" if f.value else "false")
    name = {Not: "not", Next: "next", Eventually: "eventually", Always: "always"}[type(f)]
    return Compound(name, (to_term(f.arg),))


def _check_formula_syntax(functor, args, pos):
    if functor in ("and", "or") and len(args) == 1:
        items = args[0]
        if not (isinstance(items, Compound) and items.functor == "[]"):
            raise ParseError(f"{functor}() takes a non-empty list", pos)


def parse_formula(text: str) -> Formula:
    p = TermParser(text, check=_check_formula_syntax)
    t = p.term()
    p.finish()
    try:
        return from_term(t)
    except ValueError as e:
        raise ParseError(str(e), 0, text) from None


# --------------------------------------------------------------------------
# Structure helpers
# --------------------------------------------------------------------------


def walk(f: Formula, positive_only: bool = False):
    """Yield every subformula of ``f`` (pre-order).

    With ``positive_only``, subformulas under a negation are skipped.
    """
    yield f
    if isinstance(f, Not):
        if not positive_only:
            yield from walk(f.arg, positive_only)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from walk(a, positive_only)
    elif isinstance(f, (Next, Eventually, Always)):
        yield from walk(f.arg, positive_only)
    elif isinstance(f, Viol) and not positive_only:
        yield from walk(f.cond)
        yield from walk(f.exp)


def formula_variables(f: Formula) -> set[str]:
    return named_variables(to_term(f))


def substitute(f: Formula, s) -> Formula:
    if not s:
        return f
    return from_term(apply_term(s, to_term(f)))


# --------------------------------------------------------------------------
# Observations and atom semantics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StepObservation:
    """What is visible at one tick: fluents, events, the step label and the
    (cond, exp) pairs reported violated by ``viol`` events at this tick."""

    fluents: frozenset = frozenset()
    events: frozenset = frozenset()
    label: str = ""
    violations: frozenset = frozenset()

    @classmethod
    def of(cls, fluents: Iterable[Term], events: Iterable[Term] = (), label: str = "") -> "StepObservation":
        events = frozenset(events)
        viols = frozenset(
            e.args for e in events if isinstance(e, Compound) and e.functor == "viol" and len(e.args) == 2
        )
        return cls(frozenset(fluents), events, label, viols)


def _any_match(pattern: Term, terms) -> bool:
    return any(match(pattern, g) is not None for g in terms)


def atom_holds(f: Formula, obs: StepObservation) -> bool:
    kind = type(f)
    if kind is Fluent:
        return f.term in obs.fluents if f.ground else _any_match(f.term, obs.fluents)
    if kind is Happ:
        return f.pattern in obs.events if f.ground else _any_match(f.pattern, obs.events)
    if kind is Label:
        return obs.label == f.name
    if kind is Viol:
        pattern = (to_term(f.cond), to_term(f.exp))
        return any(match(Compound("v", pattern), Compound("v", pair)) is not None for pair in obs.violations)
    raise TypeError(f"not an atomic formula: {f!r}")


_ATOMIC = frozenset({Fluent, Happ, Label, Viol})


# --------------------------------------------------------------------------
# Simplifying constructors
# --------------------------------------------------------------------------


def mk_not(a: Formula) -> Formula:
    if a is TRUE or a == TRUE:
        return FALSE
    if a is FALSE or a == FALSE:
        return TRUE
    if isinstance(a, Not):
        return a.arg
    return Not(a)


def _mk_nary(cls, parts: Iterable[Formula], unit: Const, zero: Const) -> Formula:
    out: list = []
    for p in parts:
        if p == zero:
            return zero
        if p == unit:
            continue
        for q in p.args if isinstance(p, cls) else (p,):
            if q not in out:
                out.append(q)
    if not out:
        return unit
    if len(out) == 1:
        return out[0]
    return cls(tuple(out))


def mk_and(parts: Iterable[Formula]) -> Formula:
    return _mk_nary(And, parts, TRUE, FALSE)


def mk_or(parts: Iterable[Formula]) -> Formula:
    return _mk_nary(Or, parts, FALSE, TRUE)


def simplify(f: Formula) -> Formula:
    """Remove constants, flatten nested and/or, drop duplicate operands and
    double negations. Preserves progression outcomes."""
    if isinstance(f, Not):
        return mk_not(simplify(f.arg))
    if isinstance(f, And):
        return mk_and(simplify(a) for a in f.args)
    if isinstance(f, Or):
        return mk_or(simplify(a) for a in f.args)
    if isinstance(f, Next):
        return Next(simplify(f.arg))
    if isinstance(f, Eventually):
        a = simplify(f.arg)
        return TRUE if a == TRUE else Eventually(a)
    if isinstance(f, Always):
        a = simplify(f.arg)
        return FALSE if a == FALSE else Always(a)
    return f


# --------------------------------------------------------------------------
# Progression
# --------------------------------------------------------------------------


def _progress(f: Formula, obs: StepObservation) -> Formula:
    if type(f) in _ATOMIC:
        return TRUE if atom_holds(f, obs) else FALSE
    if isinstance(f, Const):
        return f
    if isinstance(f, Not):
        return mk_not(_progress(f.arg, obs))
    if isinstance(f, And):
        parts = []
        for a in f.args:
            r = _progress(a, obs)
            if r == FALSE:
                return FALSE
            parts.append(r)
        return mk_and(parts)
    if isinstance(f, Or):
        parts = []
        for a in f.args:
            r = _progress(a, obs)
            if r == TRUE:
                return TRUE
            parts.append(r)
        return mk_or(parts)
    if isinstance(f, Next):
        return f.arg
    if isinstance(f, Eventually):
        r = _progress(f.arg, obs)
        if r == TRUE:
            return TRUE
        return f if r == FALSE else mk_or([r, f])
    if isinstance(f, Always):
        r = _progress(f.arg, obs)
        if r == FALSE:
            return FALSE
        return f if r == TRUE else mk_and([r, f])
    raise TypeError(f"unknown formula node {f!r}")


def progress(f: Formula, obs: StepObservation) -> Formula:
    """Rewrite ``f`` against one observation.

    Returns :data:`TRUE` (fulfilled), :data:`FALSE` (violated) or the residual
    formula expected from the next tick on. ``f`` must not contain named
    variables; ``_`` is allowed and matches anything.
    """
    if not _ground(f):
        raise ValueError(f"cannot progress non-ground formula {f}")
    return _progress(f, obs)


@lru_cache(maxsize=8192)
def _ground(f: Formula) -> bool:
    return not formula_variables(f)


def classify(residual: Formula) -> Optional[bool]:
    """True/False for a resolved residual, None while still pending."""
    if isinstance(residual, Const):
        return residual.value
    return None


# --------------------------------------------------------------------------
# Finite-trace semantics
# --------------------------------------------------------------------------


@lru_cache(maxsize=8192)
def _compile(g: Formula):
    """Turn ``g`` into ``fn(trace, i) -> True | False | None``."""
    kind = type(g)
    if kind is Fluent and g.ground:
        term = g.term
        return lambda tr, i: term in tr[i].fluents
    if kind is Happ and g.ground:
        pattern = g.pattern
        return lambda tr, i: pattern in tr[i].events
    if kind in _ATOMIC:
        return lambda tr, i: atom_holds(g, tr[i])
    if kind is Const:
        value = g.value
        return lambda tr, i: value
    if kind is Not:
        sub = _compile(g.arg)

        def neg(tr, i):
            v = sub(tr, i)
            return None if v is None else not v

        return neg
    if kind is And or kind is Or:
        subs = [_compile(a) for a in g.args]
        zero, unit = (False, True) if kind is And else (True, False)

        def junction(tr, i):
            result = unit
            for sub in subs:
                v = sub(tr, i)
                if v is zero:
                    return zero
                if v is None:
                    result = None
            return result

        return junction
    if kind is Next:
        sub = _compile(g.arg)
        return lambda tr, i: sub(tr, i + 1) if i + 1 < len(tr) else None
    if kind is Eventually or kind is Always:
        sub = _compile(g.arg)
        witness = kind is Eventually

        def scan(tr, i):
            for j in range(i, len(tr)):
                if sub(tr, j) is witness:
                    return witness
            return None

        return scan
    raise TypeError(f"unknown formula node {g!r}")


def trace_eval(f: Formula, trace: Sequence[StepObservation]) -> Optional[bool]:
    """Three-valued evaluation of ``f`` at position 0 of a finite trace.

    ``None`` means the truncated trace does not settle the formula: a
    ``next`` past the end, an ``eventually`` not yet satisfied or an
    ``always`` not yet broken.
    """
    if not trace:
        raise ValueError("trace must be non-empty")
    return _compile(f)(trace, 0)
