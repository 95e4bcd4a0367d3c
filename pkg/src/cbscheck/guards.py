"""Boolean guards over signal names.

Guards label automaton arcs.  They are immutable trees built from
:class:`Const`, :class:`Sig`, :class:`Not`, :class:`And` and :class:`Or`.
The textual syntax uses ``!``, ``&``, ``|``, the constants ``1``/``0`` and
parentheses, with the usual precedence ``! > & > |``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

__all__ = [
    "Guard", "Const", "Sig", "Not", "And", "Or", "TRUE", "FALSE",
    "GuardError", "GuardSyntaxError", "UnboundSignalError", "ConfigurationError",
    "conj", "disj", "neg", "parse_guard", "eval_guard", "satisfiable_under",
    "is_complete", "normalize",
]


class GuardError(Exception):
    pass


class GuardSyntaxError(GuardError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at column {pos + 1}: {text!r}")
        self.text = text
        self.pos = pos


class UnboundSignalError(GuardError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"signal {self.name!r} has no value in the valuation"


class ConfigurationError(GuardError, ValueError):
    pass


class Guard:
    """Base class for guard nodes."""

    __slots__ = ()

    def signals(self) -> frozenset[str]:
        raise NotImplementedError

    def evaluate(self, valuation: Mapping[str, bool]) -> bool:
        raise NotImplementedError

    def __str__(self) -> str:
        return _render(self, 0)

    # operator sugar, handy in tests and fixtures
    def __and__(self, other: Guard) -> Guard:
        return conj(self, other)

    def __or__(self, other: Guard) -> Guard:
        return disj(self, other)

    def __invert__(self) -> Guard:
        return neg(self)


@dataclass(frozen=True)
class Const(Guard):
    value: bool

    def signals(self):
        return frozenset()

    def evaluate(self, valuation):
        return self.value


@dataclass(frozen=True)
class Sig(Guard):
    name: str

    def __post_init__(self):
        if not self.name:
            raise GuardError("signal name must be non-empty")

    def signals(self):
        return frozenset((self.name,))

    def evaluate(self, valuation):
        try:
            return bool(valuation[self.name])
        except KeyError:
            raise UnboundSignalError(self.name) from None


@dataclass(frozen=True)
class Not(Guard):
    child: Guard

    def signals(self):
        return self.child.signals()

    def evaluate(self, valuation):
        return not self.child.evaluate(valuation)


@dataclass(frozen=True)
class And(Guard):
    children: tuple[Guard, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise GuardError("And needs at least two operands")

    def signals(self):
        return frozenset().union(*(c.signals() for c in self.children))

    def evaluate(self, valuation):
        return all(c.evaluate(valuation) for c in self.children)


@dataclass(frozen=True)
class Or(Guard):
    children: tuple[Guard, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise GuardError("Or needs at least two operands")

    def signals(self):
        return frozenset().union(*(c.signals() for c in self.children))

    def evaluate(self, valuation):
        return any(c.evaluate(valuation) for c in self.children)


TRUE = Const(True)
FALSE = Const(False)


def conj(*guards: Guard) -> Guard:
    """Conjunction with constant folding; returns TRUE for no operands."""
    parts: list[Guard] = []
    for g in guards:
        if g == FALSE:
            return FALSE
        if g == TRUE:
            continue
        parts.extend(g.children if isinstance(g, And) else (g,))
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def disj(*guards: Guard) -> Guard:
    """Disjunction with constant folding; returns FALSE for no operands."""
    parts: list[Guard] = []
    for g in guards:
        if g == TRUE:
            return TRUE
        if g == FALSE:
            continue
        parts.extend(g.children if isinstance(g, Or) else (g,))
    if not parts:
        return FALSE
    return parts[0] if len(parts) == 1 else Or(tuple(parts))


def neg(g: Guard) -> Guard:
    if isinstance(g, Const):
        return Const(not g.value)
    if isinstance(g, Not):
        return g.child
    return Not(g)


def normalize(g: Guard) -> Guard:
    """Flatten nested And/Or, drop duplicate operands, sort operands by text.

    The result is semantically equal to ``g`` and canonical enough to be used
    as a dictionary key or for stable display.
    """
    if isinstance(g, (Const, Sig)):
        return g
    if isinstance(g, Not):
        return Not(normalize(g.child))
    kind = type(g)
    flat: list[Guard] = []
    for c in g.children:
        c = normalize(c)
        flat.extend(c.children if isinstance(c, kind) else (c,))
    uniq = {str(c): c for c in flat}
    ordered = tuple(uniq[k] for k in sorted(uniq))
    if len(ordered) == 1:
        return ordered[0]
    return kind(ordered)


# -- evaluation --------------------------------------------------------------

def eval_guard(g: Guard, valuation: Mapping[str, bool]) -> bool:
    """Evaluate ``g`` under a total valuation.

    Raises :class:`UnboundSignalError` naming the first signal that the
    valuation does not cover.
    """
    return g.evaluate(valuation)


def satisfiable_under(
    g: Guard,
    fixed: Mapping[str, bool],
    free: Iterable[str],
) -> tuple[bool, Optional[dict[str, bool]]]:
    """Search assignments of the ``free`` signals that, with ``fixed``, satisfy ``g``.

    Only the free signals actually referenced by ``g`` are enumerated; the
    remaining free signals are reported inactive in the witness.  Assignments
    are tried in binary counting order, so the witness is the one with the
    fewest high-order signals active.
    """
    free = sorted(set(free))
    overlap = set(fixed).intersection(free)
    if overlap:
        raise ConfigurationError(
            f"signals both fixed and free: {', '.join(sorted(overlap))}")
    used = g.signals()
    uncovered = used - set(fixed) - set(free)
    if uncovered:
        raise ConfigurationError(
            f"signals neither fixed nor free: {', '.join(sorted(uncovered))}")
    varying = [s for s in free if s in used]
    valuation = dict(fixed)
    valuation.update((s, False) for s in free)
    for bits in itertools.product((False, True), repeat=len(varying)):
        valuation.update(zip(varying, bits))
        if g.evaluate(valuation):
            return True, dict(valuation)
    return False, None


def is_complete(out_guards: Iterable[Guard], alphabet: Iterable[str] = ()) -> bool:
    """True iff the disjunction of ``out_guards`` is a tautology.

    Checked by enumeration over the signals the guards reference; ``alphabet``
    only has to cover them.
    """
    out_guards = list(out_guards)
    used = frozenset().union(*(g.signals() for g in out_guards))
    alphabet = set(alphabet)
    if alphabet and not used <= alphabet:
        raise ConfigurationError(
            f"guards reference signals outside the alphabet: "
            f"{', '.join(sorted(used - alphabet))}")
    whole = disj(*out_guards)
    ok, _ = satisfiable_under(neg(whole), {}, used)
    return not ok


# -- concrete syntax ---------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_]*)|([01])|([!&|()]))")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise GuardSyntaxError("unexpected character", text, pos)
        start = m.start(m.lastindex)
        tokens.append((m.group(m.lastindex), start))
        pos = m.end()
    tokens.append(("", len(text)))
    return tokens


def parse_guard(text: str) -> Guard:
    """Parse the textual guard syntax into a :class:`Guard`."""
    tokens = _tokenize(text)
    i = 0

    def peek():
        return tokens[i][0]

    def take(expected=None):
        nonlocal i
        tok, pos = tokens[i]
        if expected is not None and tok != expected:
            raise GuardSyntaxError(f"expected {expected!r}", text, pos)
        i += 1
        return tok

    def disjunction():
        parts = [conjunction()]
        while peek() == "|":
            take()
            parts.append(conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction():
        parts = [unary()]
        while peek() == "&":
            take()
            parts.append(unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary():
        tok, pos = tokens[i]
        if tok == "!":
            take()
            return Not(unary())
        if tok == "(":
            take()
            inner = disjunction()
            take(")")
            return inner
        if tok == "1":
            take()
            return TRUE
        if tok == "0":
            take()
            return FALSE
        if tok and (tok[0].isalpha() or tok[0] == "_"):
            take()
            return Sig(tok)
        raise GuardSyntaxError("expected a signal, constant or '('", text, pos)

    g = disjunction()
    tok, pos = tokens[i]
    if tok:
        raise GuardSyntaxError(f"unexpected {tok!r}", text, pos)
    return g


_PREC = {Or: 1, And: 2, Not: 3}


def _render(g: Guard, outer: int) -> str:
    if isinstance(g, Const):
        return "1" if g.value else "0"
    if isinstance(g, Sig):
        return g.name
    prec = _PREC[type(g)]
    if isinstance(g, Not):
        body = "!" + _render(g.child, prec)
    else:
        sep = " & " if isinstance(g, And) else " | "
        body = sep.join(_render(c, prec + 1 if isinstance(c, type(g)) else prec)
                        for c in g.children)
    return f"({body})" if prec < outer else body
