"""Enumerators and reference evaluators shared by the test modules."""

import itertools

from ecexpect.formula import (
    Always,
    And,
    Eventually,
    Fluent,
    Happ,
    Next,
    Not,
    Or,
    StepObservation,
    classify,
    progress,
)
from ecexpect.engine import EffectRule, Engine, HoldsAt, NotHolds, load_default_rules
from ecexpect.terms import Atom, Compound, Var, apply, match, parse_term

P, Q, E = Atom("p"), Atom("q"), Atom("e")
ATOMS = (Fluent(P), Fluent(Q), Happ(E))
UNARY = (Not, Next, Eventually, Always)


def formulas_up_to(height: int) -> list:
    """Every formula over ATOMS of syntax-tree height <= ``height`` (atoms have
    height 1), with binary and/or."""
    level = list(ATOMS)
    for _ in range(height - 1):
        prev = level
        level = list(ATOMS)
        level += [op(f) for op in UNARY for f in prev]
        level += [op((a, b)) for op in (And, Or) for a in prev for b in prev]
    return level


STEPS = [
    StepObservation(frozenset(x for x, keep in ((P, p), (Q, q)) if keep), frozenset([E]) if e else frozenset())
    for p, q, e in itertools.product((False, True), repeat=3)
]


def all_traces(max_len: int):
    for n in range(1, max_len + 1):
        yield from itertools.product(STEPS, repeat=n)


def all_trace_indices(max_len: int):
    """Like :func:`all_traces`, as tuples of indices into STEPS."""
    for n in range(1, max_len + 1):
        yield from itertools.product(range(len(STEPS)), repeat=n)


def progress_verdict(f, trace):
    """Iterate progression along ``trace``; True/False once resolved, None if
    still pending at the end."""
    r = f
    for obs in trace:
        r = progress(r, obs)
        v = classify(r)
        if v is not None:
            return v
    return None


def progress_verdicts(f, max_len, memo=None):
    """progress_verdict for every trace up to ``max_len`` at once, keyed by
    STEPS-index tuples. Walks the tree of traces so that a shared prefix is
    progressed once; ``memo`` caches (residual, step) across calls."""
    memo = {} if memo is None else memo
    out = {}

    def settle(prefix, v):
        out[prefix] = v
        if len(prefix) < max_len:
            for k in range(len(STEPS)):
                settle(prefix + (k,), v)

    def walk(r, prefix):
        for k, obs in enumerate(STEPS):
            key = (r, k)
            nr = memo.get(key)
            if nr is None:
                nr = memo[key] = progress(r, obs)
            tr = prefix + (k,)
            v = classify(nr)
            if v is not None:
                settle(tr, v)
            else:
                out[tr] = None
                if len(tr) < max_len:
                    walk(nr, tr)

    walk(f, ())
    return out


# -- inertia: random effect rules against literal grounding ----------------

DOMAIN = ("a", "b")
FLUENT_FUNCTORS = ("f", "g")
ALL_FLUENTS = [Compound(p, (Atom(x),)) for p in FLUENT_FUNCTORS for x in DOMAIN]
ALL_EVENTS = [Compound("e", (Atom(x),)) for x in DOMAIN] + [Atom("h")]
X = Var("X")


def random_rule(rng):
    """Random rule over f/g, events e(X) or h. Variables are bound by the event."""
    kind = rng.choice(["initiates", "terminates"])
    if rng.random() < 0.6:
        event = Compound("e", (X,))
        args = [X, Atom("a"), Atom("b")]
    else:
        event = Atom("h")
        args = [Atom("a"), Atom("b")]
    body = []
    for _ in range(rng.randint(0, 2)):
        atom = Compound(rng.choice(FLUENT_FUNCTORS), (rng.choice(args),))
        body.append(HoldsAt(atom) if rng.random() < 0.5 else NotHolds(atom))
    if kind == "terminates" and rng.random() < 0.3:
        args = args + [Var("_")]
    fluent = Compound(rng.choice(FLUENT_FUNCTORS), (rng.choice(args),))
    return EffectRule(kind, event, fluent, tuple(body))


def oracle_effects(rules, events, state):
    """Ground every rule over the domain and test it literally."""
    init, term = set(), set()
    for rule in rules:
        for x in DOMAIN:
            s = {"X": Atom(x)}
            if apply(s, rule.event) not in events:
                continue
            ok = True
            for b in rule.body:
                held = apply(s, b.fluent) in state
                ok &= held if isinstance(b, HoldsAt) else not held
            if not ok:
                continue
            f = apply(s, rule.fluent)
            if rule.kind == "initiates":
                init.add(f)
            else:
                term.update(g for g in ALL_FLUENTS if match(f, g) is not None)
    return init, term


def inertia_run(rng) -> bool:
    """One random run; True iff every step obeys the inertia equation
    fluent by fluent."""
    rules = [random_rule(rng) for _ in range(rng.randint(1, 5))]
    e = Engine(rules).initially(f for f in ALL_FLUENTS if rng.random() < 0.5)
    for _ in range(rng.randint(1, 5)):
        events = frozenset(ev for ev in ALL_EVENTS if rng.random() < 0.4)
        before = e.current.fluents
        init, term = oracle_effects(rules, events, before)
        e.step(events, "init")
        after = e.current.fluents
        for f in ALL_FLUENTS:
            expected = f in init or (f in before and f not in term)
            if (f in after) != expected:
                return False
    return True


# -- flood cap -------------------------------------------------------------

_RULES = None
_DAMAGE = parse_term("damage(_, D)")


def flood_cap_run(rng) -> bool:
    """Several floods (and some repairs) with random V and FD, FD > V
    included; True iff no recorded damage ever exceeds V."""
    global _RULES
    if _RULES is None:
        _RULES = load_default_rules()
    v = rng.randint(0, 400)
    fd = rng.randint(0, 500)
    e = Engine(_RULES, constants={"initial_house_on_plain_value": v, "flood_causes_damage": fd})
    e.initially(parse_term(x) for x in ("location(c1, plain)", "location(c2, plain)", "location(c3, plateau)", "wealth(c1, 1000)"))
    for _ in range(rng.randint(1, 8)):
        events = {Atom("flood")} if rng.random() < 0.7 else set()
        if rng.random() < 0.2:
            events.add(parse_term(f"repair(c1, {rng.randint(0, 50)})"))
        e.step(events, "init")
        if any(s["D"].value > v for s in e.holds_at(_DAMAGE)):
            return False
    return True
