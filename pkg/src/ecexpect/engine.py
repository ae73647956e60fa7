"""Discrete Event Calculus over labelled, integer-indexed states.

State ``t + 1`` is computed from state ``t`` and the events happening at
``t``::

    fluents(t+1) = (fluents(t) - terminated(t)) | initiated(t)

so a fluent both terminated and initiated at the same tick survives. Effect
rules are read from a small Prolog-like text format::

    initiates(receive_income(A, R), wealth(A, N)) :-
        holds_at(wealth(A, O)), is(N, plus(O, R)).
    terminates(flood, damage(_, _)).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Iterator, Mapping, Optional, Union

from .terms import (
    Atom,
    Compound,
    Num,
    ParseError,
    Term,
    TermParser,
    Var,
    apply,
    eval_arith,
    is_ground,
    iter_vars,
    match,
    named_variables,
)

log = logging.getLogger(__name__)

__all__ = [
    "HoldsAt",
    "NotHolds",
    "Is",
    "Const",
    "EffectRule",
    "State",
    "Engine",
    "RuleError",
    "QueryError",
    "parse_rules",
    "load_default_rules",
]


class RuleError(ValueError):
    """A rule is malformed or produced a non-ground fluent."""


class QueryError(IndexError):
    pass


@dataclass(frozen=True)
class HoldsAt:
    fluent: Term


@dataclass(frozen=True)
class NotHolds:
    fluent: Term


@dataclass(frozen=True)
class Is:
    var: Var
    expr: Term


@dataclass(frozen=True)
class Const:
    name: str
    var: Term


BodyAtom = Union[HoldsAt, NotHolds, Is, Const]


@dataclass(frozen=True)
class EffectRule:
    kind: str  # "initiates" | "terminates"
    event: Term
    fluent: Term
    body: tuple = ()
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("initiates", "terminates"):
            raise RuleError(f"unknown rule kind {self.kind!r}")
        bound = named_variables(self.event)
        for atom in self.body:
            if isinstance(atom, HoldsAt):
                bound |= named_variables(atom.fluent)
            elif isinstance(atom, Is):
                bound.add(atom.var.name)
            elif isinstance(atom, Const) and isinstance(atom.var, Var):
                bound.add(atom.var.name)
        # variables under exp_rule(...) are the stored rule's own
        outside = list(iter_vars(self.fluent, quoted=False))
        free = {v.name for v in outside if not v.anonymous} - bound
        if free:
            raise RuleError(f"rule {self.label}: variables {sorted(free)} in fluent are never bound")
        if self.kind == "initiates" and any(v.anonymous for v in outside):
            raise RuleError(f"rule {self.label}: initiated fluent may not contain '_'")

    @property
    def label(self) -> str:
        return self.name or f"{self.kind}({self.event}, {self.fluent})"

    def __str__(self) -> str:
        head = f"{self.kind}({self.event}, {self.fluent})"
        if not self.body:
            return head + "."
        return head + " :- " + ", ".join(_body_text(b) for b in self.body) + "."


def _body_text(b: BodyAtom) -> str:
    if isinstance(b, HoldsAt):
        return f"holds_at({b.fluent})"
    if isinstance(b, NotHolds):
        return f"not_holds({b.fluent})"
    if isinstance(b, Is):
        return f"is({b.var}, {b.expr})"
    return f"const({b.name}, {b.var})"


def _body_atom(t: Term, pos: int, text: str) -> BodyAtom:
    if isinstance(t, Compound):
        if t.functor == "holds_at" and len(t.args) == 1:
            return HoldsAt(t.args[0])
        if t.functor == "not_holds" and len(t.args) == 1:
            return NotHolds(t.args[0])
        if t.functor == "is" and len(t.args) == 2 and isinstance(t.args[0], Var):
            return Is(t.args[0], t.args[1])
        if t.functor == "const" and len(t.args) == 2 and isinstance(t.args[0], Atom):
            return Const(t.args[0].name, t.args[1])
    raise ParseError(f"unsupported body atom {t}", pos, text)


def parse_rules(text: str) -> list[EffectRule]:
    """Parse effect rules, one per ``.``-terminated statement. ``%`` starts a comment."""
    p = TermParser(text)
    rules = []
    while p.peek[0] != "eof":
        start = p.peek[2]
        head = p.term()
        if not (isinstance(head, Compound) and head.functor in ("initiates", "terminates") and len(head.args) == 2):
            p.error("rule head must be initiates(Event, Fluent) or terminates(Event, Fluent)", start)
        body = []
        if p.peek[0] == "neck":
            p.i += 1
            while True:
                pos = p.peek[2]
                body.append(_body_atom(p.term(), pos, text))
                if not p.at(","):
                    break
                p.i += 1
        p.expect(".")
        line = text.count("\n", 0, start) + 1
        try:
            rules.append(EffectRule(head.functor, head.args[0], head.args[1], tuple(body), name=f"line {line}"))
        except RuleError as e:
            raise RuleError(f"{e} (line {line})") from None
    return rules


def load_default_rules() -> list[EffectRule]:
    text = resources.files("ecexpect.data").joinpath("plain_plateau.ec").read_text()
    return parse_rules(text)


@dataclass(frozen=True)
class State:
    time: int
    label: str
    fluents: frozenset

    def __contains__(self, fluent: Term) -> bool:
        return fluent in self.fluents


def _sorted(terms: Iterable[Term]) -> list[Term]:
    return sorted(terms, key=str)


@dataclass
class Engine:
    """A narrative of events and the states it induces.

    ``constants`` feeds ``const(name, V)`` body atoms. If ``labels`` is given,
    every state label must be one of them.
    """

    rules: list = field(default_factory=list)
    constants: Mapping[str, int] = field(default_factory=dict)
    labels: Optional[frozenset] = None
    initial_label: str = "init"

    def __post_init__(self):
        self.rules = list(self.rules)
        self.states: list[State] = [State(0, self.initial_label, frozenset())]
        self.narrative: list[frozenset] = []
        self._check_label(self.initial_label)

    @property
    def time(self) -> int:
        return len(self.states) - 1

    @property
    def current(self) -> State:
        return self.states[-1]

    def state(self, t: int) -> State:
        if not 0 <= t < len(self.states):
            raise QueryError(f"tick {t} outside 0..{self.time}")
        return self.states[t]

    def events_at(self, t: int) -> frozenset:
        if not 0 <= t <= self.time:
            raise QueryError(f"tick {t} outside 0..{self.time}")
        return self.narrative[t] if t < len(self.narrative) else frozenset()

    def _check_label(self, label: str):
        if self.labels is not None and label not in self.labels:
            raise ValueError(f"label {label!r} is not a configured step label")

    def initially(self, fluents: Iterable[Term]) -> "Engine":
        if self.narrative:
            raise RuntimeError("initially() must be called before the first step")
        fluents = frozenset(fluents)
        for f in fluents:
            if not is_ground(f):
                raise ValueError(f"initial fluent {f} is not ground")
        self.states[0] = State(0, self.current.label, fluents)
        return self

    # -- effect computation -------------------------------------------------

    def _solve(self, body: tuple, s: dict, fluents: frozenset) -> Iterator[dict]:
        if not body:
            yield s
            return
        atom, rest = body[0], body[1:]
        if isinstance(atom, HoldsAt):
            pattern = apply(s, atom.fluent)
            if is_ground(pattern):
                if pattern in fluents:
                    yield from self._solve(rest, s, fluents)
                return
            for f in _sorted(fluents):
                s2 = match(pattern, f, s)
                if s2 is not None:
                    yield from self._solve(rest, s2, fluents)
        elif isinstance(atom, NotHolds):
            pattern = apply(s, atom.fluent)
            if not any(match(pattern, f) is not None for f in fluents):
                yield from self._solve(rest, s, fluents)
        elif isinstance(atom, Is):
            value = Num(eval_arith(atom.expr, s))
            s2 = match(atom.var, value, s)
            if s2 is not None:
                yield from self._solve(rest, s2, fluents)
        else:
            if atom.name not in self.constants:
                raise RuleError(f"unknown constant {atom.name!r}")
            s2 = match(atom.var, Num(self.constants[atom.name]), s)
            if s2 is not None:
                yield from self._solve(rest, s2, fluents)

    def effects(self, events: Iterable[Term], fluents: frozenset) -> tuple[set, set]:
        """Fluents initiated and terminated by ``events`` against ``fluents``."""
        initiated, terminated = set(), set()
        for e in _sorted(events):
            for rule in self.rules:
                s0 = match(rule.event, e)
                if s0 is None:
                    continue
                for s in self._solve(rule.body, s0, fluents):
                    f = apply(s, rule.fluent)
                    if rule.kind == "initiates":
                        if not is_ground(f):
                            raise RuleError(f"rule {rule.label} initiates non-ground fluent {f}")
                        initiated.add(f)
                    elif is_ground(f):
                        terminated.add(f)
                    elif any(not v.anonymous for v in iter_vars(f, quoted=False)):
                        raise RuleError(f"rule {rule.label} terminates non-ground fluent {f}")
                    else:
                        terminated.update(g for g in fluents if match(f, g) is not None)
        return initiated, terminated

    def step(self, events: Iterable[Term], next_label: str) -> "Engine":
        events = frozenset(events)
        for e in events:
            if not is_ground(e):
                raise ValueError(f"event {e} is not ground")
        self._check_label(next_label)
        cur = self.current
        initiated, terminated = self.effects(events, cur.fluents)
        nxt = (cur.fluents - terminated) | initiated
        self.narrative.append(events)
        self.states.append(State(cur.time + 1, next_label, frozenset(nxt)))
        log.debug("tick %d -> %d: +%d -%d fluents", cur.time, cur.time + 1, len(initiated - cur.fluents), len(cur.fluents - nxt))
        return self

    # -- queries ------------------------------------------------------------

    def holds_at(self, pattern: Term, t: Optional[int] = None) -> list[dict]:
        state = self.state(self.time if t is None else t)
        return _matches(pattern, state.fluents)

    def happened(self, pattern: Term, t: int) -> list[dict]:
        return _matches(pattern, self.events_at(t))


def _matches(pattern: Term, terms: Iterable[Term]) -> list[dict]:
    out = []
    for g in _sorted(terms):
        s = match(pattern, g)
        if s is not None and s not in out:
            out.append(s)
    return out
