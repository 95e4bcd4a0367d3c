"""CSM component automata and systems of automata."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .guards import Guard, is_complete

__all__ = ["Arc", "Automaton", "System", "Diagnostic", "validate_system",
           "signals_of", "ModelError"]


class ModelError(ValueError):
    """Raised when a system fails validation where a valid one is required."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Arc:
    src: str
    guard: Guard
    dst: str

    @property
    def is_ear(self) -> bool:
        return self.src == self.dst


@dataclass(frozen=True)
class Automaton:
    """A Moore-style automaton: each local state emits a set of signals."""

    name: str
    states: tuple[str, ...]
    initial: str
    outputs: Mapping[str, frozenset[str]] = field(default_factory=dict)
    arcs: tuple[Arc, ...] = ()

    def emits(self, state: str) -> frozenset[str]:
        return self.outputs.get(state, frozenset())

    def arcs_from(self, state: str) -> tuple[Arc, ...]:
        return tuple(a for a in self.arcs if a.src == state)

    def internal_signals(self) -> frozenset[str]:
        return frozenset().union(*self.outputs.values()) if self.outputs else frozenset()


@dataclass(frozen=True)
class System:
    automata: tuple[Automaton, ...] = ()
    external_signals: frozenset[str] = frozenset()

    def automaton(self, name: str) -> Automaton:
        for a in self.automata:
            if a.name == name:
                return a
        raise KeyError(name)


@dataclass(frozen=True)
class Diagnostic:
    location: str
    message: str

    def __str__(self):
        return f"{self.location}: {self.message}" if self.location else self.message


def signals_of(system: System) -> tuple[frozenset[str], frozenset[str]]:
    """Split the alphabet into (internal, external) signals."""
    internal = frozenset().union(*(a.internal_signals() for a in system.automata))
    return internal, frozenset(system.external_signals)


def validate_system(system: System) -> list[Diagnostic]:
    """Return every invariant violation found in ``system`` (empty when valid)."""
    diags: list[Diagnostic] = []
    internal, external = signals_of(system)
    alphabet = internal | external

    seen = set()
    for aut in system.automata:
        if aut.name in seen:
            diags.append(Diagnostic(aut.name, "duplicate automaton name"))
        seen.add(aut.name)

    for sig in sorted(internal & external):
        diags.append(Diagnostic("", f"signal ownership conflict: {sig!r} is "
                                    "generated by a state and declared external"))
    for sig in sorted(alphabet):
        if not sig:
            diags.append(Diagnostic("", "empty signal name"))

    for aut in system.automata:
        where = aut.name
        if not aut.states:
            diags.append(Diagnostic(where, "automaton has no states"))
            continue
        if len(set(aut.states)) != len(aut.states):
            dups = sorted({s for s in aut.states if aut.states.count(s) > 1})
            diags.append(Diagnostic(where, f"duplicate local states: {', '.join(dups)}"))
        states = set(aut.states)
        if aut.initial not in states:
            diags.append(Diagnostic(where, f"initial state {aut.initial!r} is not declared"))
        for st in sorted(set(aut.outputs) - states):
            diags.append(Diagnostic(where, f"outputs given for undeclared state {st!r}"))
        for arc in aut.arcs:
            for end in (arc.src, arc.dst):
                if end not in states:
                    diags.append(Diagnostic(
                        where, f"arc {arc.src} -> {arc.dst} uses undeclared state {end!r}"))
            for sig in sorted(arc.guard.signals() - alphabet):
                diags.append(Diagnostic(
                    f"{where}.{arc.src}",
                    f"guard of arc {arc.src} -> {arc.dst} references undeclared signal {sig!r}"))
        for st in aut.states:
            guards = [a.guard for a in aut.arcs if a.src == st]
            if not is_complete(guards):
                diags.append(Diagnostic(f"{where}.{st}", f"incomplete at state {st!r}: "
                                        "the disjunction of its out-guards is not 1"))
    return diags
