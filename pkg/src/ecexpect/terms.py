"""First-order terms: representation, text syntax, one-way matching and
integer arithmetic.

The text syntax is Prolog-like::

    name   Name   _   123   -4   functor(arg1, ..., argN)

plus two extensions used to embed expectation formulas inside fluents:
``[t1, ..., tN]`` (stored as a compound with functor ``[]``) and ``@label``
(stored as a compound with functor ``@``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Optional, Union

__all__ = [
    "Atom",
    "Num",
    "Var",
    "Compound",
    "Term",
    "Substitution",
    "ParseError",
    "ArithmeticEvaluationError",
    "ANON",
    "QUOTING_FUNCTORS",
    "parse_term",
    "parse_terms",
    "match",
    "apply",
    "eval_arith",
    "is_ground",
    "variables",
    "named_variables",
    "mklist",
]


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Num:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    @property
    def anonymous(self) -> bool:
        return self.name == "_"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Compound:
    functor: str
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise ValueError(f"compound {self.functor!r} needs at least one argument")

    def __str__(self) -> str:
        if self.functor == "[]":
            return "[" + ", ".join(map(str, self.args)) + "]"
        if self.functor == "@" and len(self.args) == 1:
            return f"@{self.args[0]}"
        return f"{self.functor}(" + ", ".join(map(str, self.args)) + ")"


Term = Union[Atom, Num, Var, Compound]
Substitution = dict  # variable name -> Term

ANON = Var("_")

# Arguments of these functors are data: variables inside them are kept as
# rule-local variables rather than making the enclosing term non-ground.
QUOTING_FUNCTORS = frozenset({"exp_rule", "viol", "fulf"})


def mklist(items) -> Term:
    items = tuple(items)
    return Compound("[]", items) if items else Atom("[]")


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------


class ParseError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<num>-?\d+)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<neck>:-)
  | (?P<punct>[(),\[\]@.])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class TermParser:
    """Recursive-descent parser over a token list.

    ``check`` is called as ``check(functor, args, position)`` whenever a
    compound is built, so callers layering a stricter grammar on top of terms
    can reject constructs with an accurate position.
    """

    def __init__(self, text: str, check: Optional[Callable] = None):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.check = check

    @property
    def peek(self):
        return self.tokens[self.i]

    def error(self, message: str, position: Optional[int] = None):
        if position is None:
            position = self.peek[2]
        raise ParseError(message, position, self.text)

    def expect(self, value: str):
        kind, tok, pos = self.peek
        if tok != value or kind == "eof":
            self.error(f"expected {value!r}, found {tok or 'end of input'!r}")
        self.i += 1

    def at(self, value: str) -> bool:
        kind, tok, _ = self.peek
        return kind != "eof" and tok == value

    def term(self) -> Term:
        kind, tok, pos = self.peek
        if kind == "num":
            self.i += 1
            return Num(int(tok))
        if kind == "var":
            self.i += 1
            return Var(tok)
        if kind == "name":
            self.i += 1
            if self.at("("):
                self.i += 1
                args = self.arguments(")")
                return self.build(tok, args, pos)
            return Atom(tok)
        if tok == "[":
            self.i += 1
            if self.at("]"):
                self.i += 1
                return Atom("[]")
            return self.build("[]", self.arguments("]"), pos)
        if tok == "@":
            self.i += 1
            kind, name, _ = self.peek
            if kind != "name":
                self.error("expected label name after '@'")
            self.i += 1
            return self.build("@", (Atom(name),), pos)
        self.error(f"unexpected {tok or 'end of input'!r}")

    def arguments(self, closer: str) -> tuple:
        args = [self.term()]
        while self.at(","):
            self.i += 1
            args.append(self.term())
        self.expect(closer)
        return tuple(args)

    def build(self, functor: str, args: tuple, pos: int) -> Compound:
        if self.check is not None:
            self.check(functor, args, pos)
        return Compound(functor, args)

    def finish(self):
        if self.peek[0] != "eof":
            self.error(f"trailing input {self.peek[1]!r}")


def parse_term(text: str) -> Term:
    p = TermParser(text)
    t = p.term()
    p.finish()
    return t


def parse_terms(text: str) -> list[Term]:
    """Parse a comma-separated sequence of terms, e.g. ``"a, f(X), 3"``."""
    p = TermParser(text)
    if p.peek[0] == "eof":
        return []
    out = [p.term()]
    while p.at(","):
        p.i += 1
        out.append(p.term())
    p.finish()
    return out


# --------------------------------------------------------------------------
# Structure queries
# --------------------------------------------------------------------------


def iter_vars(t: Term, quoted: bool = True) -> Iterator[Var]:
    if isinstance(t, Var):
        yield t
    elif isinstance(t, Compound):
        if not quoted and t.functor in QUOTING_FUNCTORS:
            return
        for a in t.args:
            yield from iter_vars(a, quoted)


def variables(t: Term) -> set[str]:
    """Names of all variables in ``t``, the anonymous one included."""
    return {v.name for v in iter_vars(t)}


def named_variables(t: Term) -> set[str]:
    return {v.name for v in iter_vars(t) if not v.anonymous}


def is_ground(t: Term, quoting: bool = True) -> bool:
    """True iff ``t`` has no variables.

    With ``quoting`` (the default), variables under a quoting functor such as
    ``exp_rule`` do not count: they belong to the stored rule.
    """
    return next(iter_vars(t, quoted=not quoting), None) is None


# --------------------------------------------------------------------------
# Matching and substitution
# --------------------------------------------------------------------------


def apply(s: Mapping[str, Term], t: Term) -> Term:
    if isinstance(t, Var):
        return s.get(t.name, t)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(apply(s, a) for a in t.args))
    return t


def _match(p: Term, g: Term, s: dict) -> bool:
    if isinstance(p, Var):
        if p.name == "_":
            return True
        bound = s.get(p.name)
        if bound is None:
            s[p.name] = g
            return True
        return bound == g
    if isinstance(p, Compound):
        if not isinstance(g, Compound) or p.functor != g.functor or len(p.args) != len(g.args):
            return False
        return all(_match(pa, ga, s) for pa, ga in zip(p.args, g.args))
    return p == g


def match(pattern: Term, ground: Term, bindings: Optional[Mapping[str, Term]] = None) -> Optional[Substitution]:
    """One-way match of ``pattern`` against ``ground``.

    Returns the most general substitution (extending ``bindings`` if given)
    or ``None``. Each ``_`` matches anything and binds nothing.
    """
    s = dict(bindings) if bindings else {}
    return s if _match(pattern, ground, s) else None


# --------------------------------------------------------------------------
# Arithmetic
# --------------------------------------------------------------------------


class ArithmeticEvaluationError(ValueError):
    pass


_ARITH = {
    "plus": lambda a, b: a + b,
    "minus": lambda a, b: a - b,
    "min": min,
}


def eval_arith(expr: Term, bindings: Optional[Mapping[str, Term]] = None) -> int:
    bindings = bindings or {}
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        if expr.name not in bindings:
            raise ArithmeticEvaluationError(f"unbound variable {expr.name} in arithmetic")
        return eval_arith(bindings[expr.name], {})
    if isinstance(expr, Compound) and expr.functor in _ARITH and len(expr.args) == 2:
        a, b = (eval_arith(x, bindings) for x in expr.args)
        return _ARITH[expr.functor](a, b)
    raise ArithmeticEvaluationError(f"cannot evaluate {expr}")
