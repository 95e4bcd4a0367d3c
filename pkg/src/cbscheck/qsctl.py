"""QsCTL formulas: syntax tree, concrete syntax, scoping and set ranges.

Concrete syntax (see README for the full grammar)::

    AG (in sig(call) -> AF resp)
    forall v in sig(call): (AF in v)
    A[p Uw q]      AX[CLIENT] p      in proj(CLIENT.req)      in {a, b}

Prefix operators (``!``, ``AG``, ``AF``, ``AX``, ``AX[a]``, quantifiers) bind
tighter than ``&``, which binds tighter than ``|``, which binds tighter than
the right-associative ``->``.  A quantifier body is therefore a single prefix
operand; parenthesize it when it is compound.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .charsets import char_sets
from .rg import RGraph

__all__ = [
    "Formula", "Const", "SignalAtom", "InState", "InSet", "InProj", "Neg",
    "Conj", "Disj", "Implies", "AG", "AF", "AX", "AUw", "AXa", "Quant",
    "StateTerm", "SetExpr", "AllStates", "BySignal", "ByProj", "Literal",
    "CharSet", "SetOp", "FormulaSyntaxError", "parse_formula", "parse_set",
    "to_text", "free_vars", "bind_check", "quantifier_ranges",
    "resolve_set", "resolve_state", "substitute", "expand_quantifiers",
    "conj_of", "disj_of", "TRUE", "FALSE", "is_temporal", "children",
    "DynamicRangeError", "CharSetSingleton",
]

CHARSET_KINDS = ("FUT", "PAS", "CYC", "END", "BEG")


# -- syntax tree -------------------------------------------------------------

@dataclass(frozen=True)
class StateTerm:
    name: str
    is_var: bool = False

    def __str__(self):
        return self.name


class SetExpr:
    __slots__ = ()

    def __str__(self):
        return _set_text(self, top=True)


@dataclass(frozen=True)
class AllStates(SetExpr):
    pass


@dataclass(frozen=True)
class BySignal(SetExpr):
    name: str


@dataclass(frozen=True)
class ByProj(SetExpr):
    automaton: str
    local: str


@dataclass(frozen=True)
class Literal(SetExpr):
    names: tuple[str, ...]


@dataclass(frozen=True)
class CharSet(SetExpr):
    kind: str
    of: StateTerm

    def __post_init__(self):
        if self.kind not in CHARSET_KINDS:
            raise ValueError(f"unknown characteristic set {self.kind!r}")


@dataclass(frozen=True)
class SetOp(SetExpr):
    op: str  # "union" | "inter" | "minus"
    left: SetExpr
    right: SetExpr


class Formula:
    __slots__ = ()

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True)
class SignalAtom(Formula):
    name: str


@dataclass(frozen=True)
class InState(Formula):
    term: StateTerm


@dataclass(frozen=True)
class InSet(Formula):
    expr: SetExpr


@dataclass(frozen=True)
class InProj(Formula):
    automaton: str
    local: str


@dataclass(frozen=True)
class Neg(Formula):
    child: Formula


@dataclass(frozen=True)
class Conj(Formula):
    children: tuple[Formula, ...]


@dataclass(frozen=True)
class Disj(Formula):
    children: tuple[Formula, ...]


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class AG(Formula):
    child: Formula


@dataclass(frozen=True)
class AF(Formula):
    child: Formula


@dataclass(frozen=True)
class AX(Formula):
    child: Formula


@dataclass(frozen=True)
class AUw(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class AXa(Formula):
    automaton: str
    child: Formula


@dataclass(frozen=True)
class Quant(Formula):
    kind: str  # "forall" | "exists"
    var: str
    range: SetExpr
    body: Formula

    def __post_init__(self):
        if self.kind not in ("forall", "exists"):
            raise ValueError(f"unknown quantifier {self.kind!r}")


TRUE = Const(True)
FALSE = Const(False)

TEMPORAL = (AG, AF, AX, AUw, AXa)


def is_temporal(f: Formula) -> bool:
    return isinstance(f, TEMPORAL)


def conj_of(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else Conj(parts)


def disj_of(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if not parts:
        return FALSE
    return parts[0] if len(parts) == 1 else Disj(parts)


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Neg, AG, AF, AX, AXa)):
        return (f.child,)
    if isinstance(f, (Conj, Disj)):
        return f.children
    if isinstance(f, (Implies, AUw)):
        return (f.left, f.right)
    if isinstance(f, Quant):
        return (f.body,)
    return ()


# -- parsing -----------------------------------------------------------------

class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at column {pos + 1}: {text!r}")
        self.text = text
        self.pos = pos


KEYWORDS = frozenset({
    "AG", "AF", "AX", "A", "Uw", "in", "forall", "exists", "sig", "proj",
    "all", "union", "inter", "minus", *CHARSET_KINDS,
})

_TOKEN = re.compile(r"->|[A-Za-z_][A-Za-z0-9_]*|[01]|[!&|()\[\]{},:.]")


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError("unexpected character", text, pos)
        tokens.append((m.group(), pos))
        pos = m.end()
    tokens.append(("", len(text)))
    return tokens


def _is_ident(tok: str) -> bool:
    return bool(tok) and (tok[0].isalpha() or tok[0] == "_") and tok not in KEYWORDS


class _Parser:
    def __init__(self, text: str, bound: Iterable[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.scope = list(bound)

    # token helpers
    def peek(self, k: int = 0) -> str:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)][0]

    def error(self, message: str):
        raise FormulaSyntaxError(message, self.text, self.tokens[self.i][1])

    def take(self, expected: Optional[str] = None) -> str:
        tok = self.peek()
        if expected is not None and tok != expected:
            self.error(f"expected {expected!r}, found {tok or 'end of input'!r}")
        self.i += 1
        return tok

    def ident(self, keywords_ok: bool = False) -> str:
        # keywords are fine where only a name can appear, e.g. AX[A]
        tok = self.peek()
        word = bool(tok) and (tok[0].isalpha() or tok[0] == "_")
        if not (_is_ident(tok) or keywords_ok and word):
            self.error(f"expected an identifier, found {tok or 'end of input'!r}")
        return self.take()

    def term(self, name: str) -> StateTerm:
        return StateTerm(name, name in self.scope)

    # formulas
    def formula(self) -> Formula:
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.peek() == "|":
            self.take()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Disj(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.unary()]
        while self.peek() == "&":
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else Conj(tuple(parts))

    def unary(self) -> Formula:
        tok = self.peek()
        if tok == "!":
            self.take()
            return Neg(self.unary())
        if tok == "AG":
            self.take()
            return AG(self.unary())
        if tok == "AF":
            self.take()
            return AF(self.unary())
        if tok == "AX":
            self.take()
            if self.peek() == "[":
                self.take()
                aut = self.ident(True)
                self.take("]")
                return AXa(aut, self.unary())
            return AX(self.unary())
        if tok == "A":
            self.take()
            self.take("[")
            left = self.formula()
            self.take("Uw")
            right = self.formula()
            self.take("]")
            return AUw(left, right)
        if tok in ("forall", "exists"):
            self.take()
            var = self.ident()
            self.take("in")
            rng = _finish(self.set_expr(), self)
            self.take(":")
            self.scope.append(var)
            try:
                body = self.unary()
            finally:
                self.scope.pop()
            return Quant(tok, var, rng, body)
        if tok == "in":
            self.take()
            return self.in_atom()
        if tok == "(":
            self.take()
            inner = self.formula()
            self.take(")")
            return inner
        if tok in ("1", "0"):
            self.take()
            return TRUE if tok == "1" else FALSE
        if _is_ident(tok):
            return SignalAtom(self.take())
        self.error(f"unexpected {tok or 'end of input'!r}")

    def in_atom(self) -> Formula:
        expr = self.set_expr()
        if isinstance(expr, _Name):
            return InState(self.term(expr.name))
        if isinstance(expr, ByProj):
            return InProj(expr.automaton, expr.local)
        return InSet(_finish(expr, self))

    # set expressions
    def set_expr(self) -> SetExpr:
        left = self.set_term()
        while self.peek() in ("union", "inter", "minus"):
            op = self.take()
            left = SetOp(op, _finish(left, self), _finish(self.set_term(), self))
        return left

    def set_term(self) -> SetExpr:
        tok = self.peek()
        if tok == "all":
            self.take()
            return AllStates()
        if tok == "sig":
            self.take()
            self.take("(")
            name = self.ident(True)
            self.take(")")
            return BySignal(name)
        if tok == "proj":
            self.take()
            self.take("(")
            aut = self.ident(True)
            self.take(".")
            local = self.ident(True)
            self.take(")")
            return ByProj(aut, local)
        if tok in CHARSET_KINDS:
            self.take()
            self.take("(")
            name = self.ident(True)
            self.take(")")
            return CharSet(tok, self.term(name))
        if tok == "{":
            self.take()
            names = []
            if self.peek() != "}":
                names.append(self.ident())
                while self.peek() == ",":
                    self.take()
                    names.append(self.ident())
            self.take("}")
            lits = tuple(n for n in names if n not in self.scope)
            out: Optional[SetExpr] = Literal(lits) if lits or len(lits) == len(names) else None
            for n in names:
                if n in self.scope:
                    single = CharSetSingleton(StateTerm(n, True))
                    out = single if out is None else SetOp("union", out, single)
            return out
        if tok == "(":
            self.take()
            inner = _finish(self.set_expr(), self)
            self.take(")")
            return inner
        if _is_ident(tok):
            return _Name(self.take())
        self.error(f"expected a state set, found {tok or 'end of input'!r}")


@dataclass(frozen=True)
class _Name(SetExpr):
    # a bare name inside a set expression, before it is known to stand alone
    name: str


def _finish(expr: SetExpr, parser: _Parser) -> SetExpr:
    if isinstance(expr, _Name):
        term = parser.term(expr.name)
        if term.is_var:
            # a variable denotes the singleton set of its value
            return CharSetSingleton(term)
        return Literal((expr.name,))
    return expr


@dataclass(frozen=True)
class CharSetSingleton(SetExpr):
    """``{v}`` for a state term, produced when a bare name appears in a set expression."""

    of: StateTerm


def parse_formula(text: str, bound: Iterable[str] = ()) -> Formula:
    """Parse ``text``; names in ``bound`` are treated as already-bound variables."""
    p = _Parser(text, bound)
    f = p.formula()
    if p.peek():
        p.error(f"unexpected {p.peek()!r}")
    return f


def parse_set(text: str, bound: Iterable[str] = ()) -> SetExpr:
    p = _Parser(text, bound)
    expr = _finish(p.set_expr(), p)
    if p.peek():
        p.error(f"unexpected {p.peek()!r}")
    return expr


# -- printing ----------------------------------------------------------------

_LEVEL = {Implies: 1, Disj: 2, Conj: 3}


def to_text(f: Formula) -> str:
    """Render ``f`` so that parsing the text gives back an equal tree."""
    return _text(f, 0)


def _text(f: Formula, outer: int) -> str:
    if isinstance(f, Const):
        return "1" if f.value else "0"
    if isinstance(f, SignalAtom):
        return f.name
    if isinstance(f, InState):
        return f"in {f.term.name}"
    if isinstance(f, InProj):
        return f"in proj({f.automaton}.{f.local})"
    if isinstance(f, InSet):
        return f"in {_set_text(f.expr, top=False)}"
    if isinstance(f, Neg):
        return "!" + _text(f.child, 4)
    if isinstance(f, AG):
        return "AG " + _text(f.child, 4)
    if isinstance(f, AF):
        return "AF " + _text(f.child, 4)
    if isinstance(f, AX):
        return "AX " + _text(f.child, 4)
    if isinstance(f, AXa):
        return f"AX[{f.automaton}] " + _text(f.child, 4)
    if isinstance(f, AUw):
        return f"A[{_text(f.left, 0)} Uw {_text(f.right, 0)}]"
    if isinstance(f, Quant):
        return f"{f.kind} {f.var} in {_set_text(f.range, top=True)}: {_text(f.body, 4)}"
    level = _LEVEL[type(f)]
    if isinstance(f, Implies):
        body = f"{_text(f.left, level + 1)} -> {_text(f.right, level)}"
    else:
        sep = " & " if isinstance(f, Conj) else " | "
        if len(f.children) < 2:
            # degenerate n-ary nodes only arise programmatically
            return _text(conj_of(f.children) if isinstance(f, Conj)
                         else disj_of(f.children), outer)
        body = sep.join(_text(c, level + 1) for c in f.children)
    return f"({body})" if level < outer else body


def _set_text(e: SetExpr, top: bool) -> str:
    if isinstance(e, AllStates):
        return "all"
    if isinstance(e, BySignal):
        return f"sig({e.name})"
    if isinstance(e, ByProj):
        return f"proj({e.automaton}.{e.local})"
    if isinstance(e, Literal):
        return "{" + ", ".join(e.names) + "}"
    if isinstance(e, CharSet):
        return f"{e.kind}({e.of.name})"
    if isinstance(e, CharSetSingleton):
        return e.of.name
    if isinstance(e, _Name):
        return e.name
    if isinstance(e, SetOp):
        body = f"{_set_text(e.left, False)} {e.op} {_set_text(e.right, False)}"
        return body if top else f"({body})"
    raise TypeError(f"not a set expression: {e!r}")


# -- scoping -----------------------------------------------------------------

def _set_vars(e: SetExpr) -> set[str]:
    if isinstance(e, (CharSet, CharSetSingleton)):
        return {e.of.name} if e.of.is_var else set()
    if isinstance(e, SetOp):
        return _set_vars(e.left) | _set_vars(e.right)
    return set()


def free_vars(f: Formula) -> frozenset[str]:
    """Variables referenced by ``f`` and not bound by a quantifier inside it."""
    if isinstance(f, InState):
        return frozenset({f.term.name}) if f.term.is_var else frozenset()
    if isinstance(f, InSet):
        return frozenset(_set_vars(f.expr))
    if isinstance(f, Quant):
        return frozenset(_set_vars(f.range)) | (free_vars(f.body) - {f.var})
    out: frozenset[str] = frozenset()
    for c in children(f):
        out |= free_vars(c)
    return out


def quantifier_ranges(f: Formula) -> list[tuple[Quant, bool]]:
    """Every quantifier in ``f`` paired with whether its range is static."""
    found: list[tuple[Quant, bool]] = []

    def walk(g: Formula):
        if isinstance(g, Quant):
            found.append((g, not _set_vars(g.range)))
        for c in children(g):
            walk(c)

    walk(f)
    return found


def bind_check(f: Formula, rg: Optional[RGraph] = None, system=None,
               bound: Iterable[str] = ()) -> list[str]:
    """Diagnostics for unbound variables and names that do not resolve.

    Name resolution needs a context: ``rg`` for global-state names and
    ``system`` (or, failing that, ``rg``) for automata, local states and
    signals.  Without context only variable scoping is checked.
    """
    diags: list[str] = []
    states = set(rg.names) if rg is not None else None
    autos: Optional[dict[str, set[str]]] = None
    signals: Optional[set[str]] = None
    if system is not None:
        autos = {a.name: set(a.states) for a in system.automata}
        signals = set(system.external_signals).union(
            *(a.internal_signals() for a in system.automata))
    elif rg is not None:
        autos = {c: {st.locals[k] for st in rg.states} for k, c in enumerate(rg.components)}

    def term(t: StateTerm, scope):
        if t.is_var:
            if t.name not in scope:
                diags.append(f"unbound variable {t.name}")
        elif t.name in scope:
            diags.append(f"variable {t.name} used as a state literal")
        elif states is not None and t.name not in states:
            diags.append(f"unbound variable {t.name} (and no global state of that name)")
        elif states is None:
            diags.append(f"unbound variable {t.name} (no graph given to resolve it as a state)")

    def proj(aut: str, local: str):
        if autos is None:
            return
        if aut not in autos:
            diags.append(f"unknown automaton {aut}")
        elif local not in autos[aut]:
            diags.append(f"unknown local state {aut}.{local}")

    def sig(name: str):
        if signals is not None and name not in signals:
            diags.append(f"unknown signal {name}")

    def set_expr(e: SetExpr, scope):
        if isinstance(e, BySignal):
            sig(e.name)
        elif isinstance(e, ByProj):
            proj(e.automaton, e.local)
        elif isinstance(e, Literal):
            for n in e.names:
                term(StateTerm(n), scope)
        elif isinstance(e, (CharSet, CharSetSingleton)):
            term(e.of, scope)
        elif isinstance(e, SetOp):
            set_expr(e.left, scope)
            set_expr(e.right, scope)

    def walk(g: Formula, scope: frozenset[str]):
        if isinstance(g, SignalAtom):
            sig(g.name)
        elif isinstance(g, InState):
            term(g.term, scope)
        elif isinstance(g, InProj):
            proj(g.automaton, g.local)
        elif isinstance(g, InSet):
            set_expr(g.expr, scope)
        elif isinstance(g, AXa):
            if autos is not None and g.automaton not in autos:
                diags.append(f"unknown automaton {g.automaton}")
        if isinstance(g, Quant):
            set_expr(g.range, scope)
            walk(g.body, scope | {g.var})
            return
        for c in children(g):
            walk(c, scope)

    walk(f, frozenset(bound))
    return diags


# -- semantics of state terms and sets ---------------------------------------

def resolve_state(t: StateTerm, rg: RGraph, env: Mapping[str, int]) -> int:
    if t.is_var:
        try:
            return env[t.name]
        except KeyError:
            raise KeyError(f"unbound variable {t.name}") from None
    return rg.state_id(t.name)


def resolve_set(e: SetExpr, rg: RGraph, env: Mapping[str, int]) -> frozenset[int]:
    """The set of state ids denoted by ``e`` under the bindings ``env``."""
    if isinstance(e, AllStates):
        return frozenset(range(len(rg.states)))
    if isinstance(e, BySignal):
        return frozenset(i for i, st in enumerate(rg.states) if e.name in st.outputs)
    if isinstance(e, ByProj):
        k = rg.component_index(e.automaton)
        return frozenset(i for i, st in enumerate(rg.states) if st.locals[k] == e.local)
    if isinstance(e, Literal):
        return frozenset(rg.state_id(n) for n in e.names)
    if isinstance(e, CharSet):
        return char_sets(rg, resolve_state(e.of, rg, env)).get(e.kind)
    if isinstance(e, CharSetSingleton):
        return frozenset({resolve_state(e.of, rg, env)})
    if isinstance(e, SetOp):
        a = resolve_set(e.left, rg, env)
        b = resolve_set(e.right, rg, env)
        return {"union": a | b, "inter": a & b, "minus": a - b}[e.op]
    raise TypeError(f"not a set expression: {e!r}")


# -- substitution and grounding ----------------------------------------------

def _subst_term(t: StateTerm, var: str, name: str) -> StateTerm:
    return StateTerm(name) if t.is_var and t.name == var else t


def _subst_set(e: SetExpr, var: str, name: str) -> SetExpr:
    if isinstance(e, CharSet):
        return CharSet(e.kind, _subst_term(e.of, var, name))
    if isinstance(e, CharSetSingleton):
        t = _subst_term(e.of, var, name)
        return Literal((t.name,)) if not t.is_var else e
    if isinstance(e, SetOp):
        return SetOp(e.op, _subst_set(e.left, var, name), _subst_set(e.right, var, name))
    return e


def substitute(f: Formula, var: str, name: str) -> Formula:
    """Replace free occurrences of variable ``var`` by the state literal ``name``."""
    if isinstance(f, InState):
        return InState(_subst_term(f.term, var, name))
    if isinstance(f, InSet):
        return InSet(_subst_set(f.expr, var, name))
    if isinstance(f, Quant):
        rng = _subst_set(f.range, var, name)
        body = f.body if f.var == var else substitute(f.body, var, name)
        return Quant(f.kind, f.var, rng, body)
    if isinstance(f, (Neg, AG, AF, AX)):
        return type(f)(substitute(f.child, var, name))
    if isinstance(f, AXa):
        return AXa(f.automaton, substitute(f.child, var, name))
    if isinstance(f, (Conj, Disj)):
        return type(f)(tuple(substitute(c, var, name) for c in f.children))
    if isinstance(f, (Implies, AUw)):
        return type(f)(substitute(f.left, var, name), substitute(f.right, var, name))
    return f


class DynamicRangeError(ValueError):
    def __init__(self, quant: Quant):
        super().__init__(
            f"quantifier range {_set_text(quant.range, True)!r} of {quant.var} "
            "depends on another variable and cannot be grounded statically")
        self.quant = quant


def expand_quantifiers(f: Formula, rg: RGraph) -> Formula:
    """Rewrite every quantifier into a finite conjunction or disjunction.

    Only static ranges (no variable inside the range) are accepted; bodies
    are expanded after substitution, so inner ranges that mention an outer
    variable become static once it is substituted.  Ranges that still
    depend on a variable raise :class:`DynamicRangeError`.
    """
    if isinstance(f, Quant):
        if _set_vars(f.range):
            raise DynamicRangeError(f)
        members = sorted(resolve_set(f.range, rg, {}))
        parts = [expand_quantifiers(substitute(f.body, f.var, rg.names[u]), rg)
                 for u in members]
        return conj_of(parts) if f.kind == "forall" else disj_of(parts)
    if isinstance(f, (Neg, AG, AF, AX)):
        return type(f)(expand_quantifiers(f.child, rg))
    if isinstance(f, AXa):
        return AXa(f.automaton, expand_quantifiers(f.child, rg))
    if isinstance(f, (Conj, Disj)):
        return type(f)(tuple(expand_quantifiers(c, rg) for c in f.children))
    if isinstance(f, (Implies, AUw)):
        return type(f)(expand_quantifiers(f.left, rg), expand_quantifiers(f.right, rg))
    return f

