"""Expectation monitoring.

An ``exp_rule(Cond, Exp)`` fluent says: whenever ``Cond`` holds, ``Exp`` is
expected. Each tick the monitor fires every rule whose condition holds,
progresses the active expectations, and reports the ones that were fulfilled
or violated. The driver hands those back to the engine as ``fulf(C, E)`` and
``viol(C, E)`` events at the following tick.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .formula import (
    And,
    Always,
    Const,
    Eventually,
    Fluent,
    Formula,
    Happ,
    Label,
    Next,
    Not,
    Or,
    StepObservation,
    Viol,
    classify,
    formula_variables,
    from_term,
    progress,
    substitute,
    to_term,
    walk,
)
from .terms import Compound, Term, apply, match

log = logging.getLogger(__name__)

__all__ = ["ExpRule", "ActiveExpectation", "MonitorOutput", "Monitor", "MonitorRuleError", "outcome_events", "rules_in"]


class MonitorRuleError(ValueError):
    pass


def _temporal(f: Formula) -> bool:
    # viol(C, E) names a pair of formulas; E is matched, not evaluated
    if isinstance(f, (Next, Eventually, Always)):
        return True
    if isinstance(f, Not):
        return _temporal(f.arg)
    if isinstance(f, (And, Or)):
        return any(_temporal(a) for a in f.args)
    return False


@dataclass(frozen=True)
class ExpRule:
    cond: Formula
    exp: Formula
    source: Term

    @classmethod
    def from_term(cls, t: Term) -> "ExpRule":
        if not (isinstance(t, Compound) and t.functor == "exp_rule" and len(t.args) == 2):
            raise MonitorRuleError(f"not an exp_rule term: {t}")
        try:
            cond, exp = from_term(t.args[0]), from_term(t.args[1])
        except ValueError as e:
            raise MonitorRuleError(f"{t}: {e}") from None
        if _temporal(cond):
            raise MonitorRuleError(f"{t}: temporal operator in condition")
        unsafe = formula_variables(exp) - formula_variables(cond)
        if unsafe:
            raise MonitorRuleError(f"{t}: variables {sorted(unsafe)} in expectation do not occur in condition")
        return cls(cond, exp, t)

    @classmethod
    def parse(cls, text: str) -> "ExpRule":
        from .terms import parse_term

        return cls.from_term(parse_term(text))

    def __str__(self) -> str:
        return str(self.source)


@dataclass(frozen=True)
class ActiveExpectation:
    rule: ExpRule
    grounding: tuple  # sorted (var, term) pairs
    residual: Formula
    activated_at: int
    cond: Term  # instantiated condition
    exp: Term  # instantiated expectation, normalised

    @property
    def key(self) -> tuple:
        return (self.rule.source, self.grounding, self.residual)

    @property
    def pair(self) -> tuple:
        return (self.cond, self.exp)


@dataclass
class MonitorOutput:
    activated: list = field(default_factory=list)
    fulfilments: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    surviving: list = field(default_factory=list)


def rules_in(fluents: Iterable[Term]) -> list[ExpRule]:
    """The expectation rules stored as ``exp_rule`` fluents, in a stable order."""
    out = []
    for f in sorted(fluents, key=str):
        if isinstance(f, Compound) and f.functor == "exp_rule":
            out.append(ExpRule.from_term(f))
    return out


def outcome_events(out: MonitorOutput) -> list[Term]:
    events = [Compound("fulf", pair) for pair in out.fulfilments]
    events += [Compound("viol", pair) for pair in out.violations]
    return events


def _solutions(f: Formula, obs: StepObservation, s: dict) -> Iterator[dict]:
    """Substitutions extending ``s`` under which condition ``f`` holds."""
    if isinstance(f, Fluent):
        pattern = apply(s, f.term)
        for g in sorted(obs.fluents, key=str):
            s2 = match(pattern, g, s)
            if s2 is not None:
                yield s2
    elif isinstance(f, Happ):
        pattern = apply(s, f.pattern)
        for g in sorted(obs.events, key=str):
            s2 = match(pattern, g, s)
            if s2 is not None:
                yield s2
    elif isinstance(f, Label):
        if obs.label == f.name:
            yield s
    elif isinstance(f, Viol):
        pattern = Compound("v", (apply(s, to_term(f.cond)), apply(s, to_term(f.exp))))
        for pair in sorted(obs.violations, key=str):
            s2 = match(pattern, Compound("v", pair), s)
            if s2 is not None:
                yield s2
    elif isinstance(f, And):
        yield from _conjunction(f.args, obs, s)
    elif isinstance(f, Or):
        for a in f.args:
            yield from _solutions(a, obs, s)
    elif isinstance(f, Not):
        if next(_solutions(f.arg, obs, s), None) is None:
            yield s
    elif isinstance(f, Const):
        if f.value:
            yield s
    else:
        raise MonitorRuleError(f"{f} is not allowed in a rule condition")


def _conjunction(parts: tuple, obs: StepObservation, s: dict) -> Iterator[dict]:
    if not parts:
        yield s
        return
    for s2 in _solutions(parts[0], obs, s):
        yield from _conjunction(parts[1:], obs, s2)


class Monitor:
    """Holds the active expectations of one simulation.

    ``tick`` runs activation then progression on the same observation. A
    driver that lets agents consult expectations before acting can call
    :meth:`activate` and :meth:`progress` separately.
    """

    def __init__(self):
        self.active: list[ActiveExpectation] = []
        self.last_activated: list[ActiveExpectation] = []

    def activate(self, obs: StepObservation, rules: Iterable[ExpRule], time: int = 0) -> list[ActiveExpectation]:
        keys = {a.key for a in self.active}
        fresh = []
        cond_vars_cache = {}
        for rule in rules:
            cvars = cond_vars_cache.setdefault(rule, sorted(formula_variables(rule.cond)))
            seen = []
            for s in _solutions(rule.cond, obs, {}):
                grounding = tuple((v, s[v]) for v in cvars if v in s)
                if grounding in seen:
                    continue
                seen.append(grounding)
                exp = substitute(rule.exp, s)
                if formula_variables(exp):
                    raise MonitorRuleError(f"rule {rule} left {exp} non-ground")
                inst = ActiveExpectation(
                    rule=rule,
                    grounding=grounding,
                    residual=exp,
                    activated_at=time,
                    cond=to_term(substitute(rule.cond, s)),
                    exp=to_term(exp),
                )
                if inst.key in keys:
                    continue
                keys.add(inst.key)
                fresh.append(inst)
        self.active.extend(fresh)
        self.last_activated = fresh
        return fresh

    def progress(self, obs: StepObservation) -> MonitorOutput:
        out = MonitorOutput(activated=list(self.last_activated))
        surviving = []
        for a in self.active:
            r = progress(a.residual, obs)
            verdict = classify(r)
            if verdict is True:
                out.fulfilments.append(a.pair)
            elif verdict is False:
                out.violations.append(a.pair)
            else:
                surviving.append(
                    ActiveExpectation(a.rule, a.grounding, r, a.activated_at, a.cond, a.exp)
                )
        # progression can make two instances identical; keep one
        unique, keys = [], set()
        for a in surviving:
            if a.key not in keys:
                keys.add(a.key)
                unique.append(a)
        self.active = unique
        out.surviving = list(unique)
        if out.violations:
            log.debug("violations: %s", ", ".join(f"{c} / {e}" for c, e in out.violations))
        return out

    def tick(self, obs: StepObservation, rules: Optional[Iterable[ExpRule]] = None, time: int = 0) -> MonitorOutput:
        if rules is None:
            rules = rules_in(obs.fluents)
        self.activate(obs, rules, time)
        return self.progress(obs)

    def expected_instances(self, pattern) -> list[dict]:
        """Match ``pattern`` against the atoms that active expectations
        require, e.g. ``location(A, L)`` against ``next(location(c1, plateau))``.

        Atoms under a negation are not expectations of that atom and are skipped.
        """
        target = to_term(pattern) if isinstance(pattern, Formula) else pattern
        seen_ids = set()
        out = []
        for a in list(self.active) + list(self.last_activated):
            if id(a) in seen_ids:
                continue
            seen_ids.add(id(a))
            for sub in walk(a.residual, positive_only=True):
                if isinstance(sub, (Fluent, Happ)):
                    s = match(target, to_term(sub))
                    if s is not None and s not in out:
                        out.append(s)
        return out
