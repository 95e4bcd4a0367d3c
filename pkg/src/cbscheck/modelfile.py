"""Reader for the textual CSM model format.

::

    # comments run to the end of the line
    external x
    automaton SERVER
      state idle
      state answ emits resp
      arc idle -> serve when call
      arc idle -> idle  when !call & !x

The first ``state`` of an automaton is its initial state unless an
``initial <name>`` line says otherwise.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Union

from .guards import GuardSyntaxError, parse_guard
from .model import Arc, Automaton, System

__all__ = ["ModelSyntaxError", "parse_model", "load_model", "fixture_names",
           "fixture_text"]

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_ARC = re.compile(rf"^arc\s+({_IDENT})\s*->\s*({_IDENT})\s+when\s+(.+)$")
_STATE = re.compile(rf"^state\s+({_IDENT})(?:\s+emits(?:\s+(.*))?)?$")


class ModelSyntaxError(ValueError):
    def __init__(self, message: str, line: int, source: str = "<model>"):
        super().__init__(f"{source}:{line}: {message}")
        self.line = line


def _names(text: str, lineno: int, source: str) -> list[str]:
    out = [part.strip() for part in text.split(",") if part.strip()]
    for name in out:
        if not re.fullmatch(_IDENT, name):
            raise ModelSyntaxError(f"bad signal name {name!r}", lineno, source)
    return out


def parse_model(text: str, source: str = "<model>") -> System:
    """Parse model text into a :class:`System` (not yet validated)."""
    automata: list[dict] = []
    external: list[str] = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word = line.split(None, 1)[0]
        rest = line[len(word):].strip()
        if word == "external":
            external.extend(_names(rest, lineno, source))
        elif word == "automaton":
            if not re.fullmatch(_IDENT, rest):
                raise ModelSyntaxError(f"bad automaton name {rest!r}", lineno, source)
            current = {"name": rest, "states": [], "initial": None,
                       "outputs": {}, "arcs": []}
            automata.append(current)
        elif current is None:
            raise ModelSyntaxError(f"{word!r} outside of an automaton block", lineno, source)
        elif word == "state":
            m = _STATE.match(line)
            if not m:
                raise ModelSyntaxError("expected 'state <name> [emits <sig,...>]'",
                                       lineno, source)
            name = m.group(1)
            current["states"].append(name)
            current["outputs"][name] = frozenset(_names(m.group(2) or "", lineno, source))
        elif word == "initial":
            if not re.fullmatch(_IDENT, rest):
                raise ModelSyntaxError(f"bad state name {rest!r}", lineno, source)
            current["initial"] = rest
        elif word == "arc":
            m = _ARC.match(line)
            if not m:
                raise ModelSyntaxError("expected 'arc <from> -> <to> when <guard>'",
                                       lineno, source)
            try:
                guard = parse_guard(m.group(3))
            except GuardSyntaxError as exc:
                raise ModelSyntaxError(str(exc), lineno, source) from None
            current["arcs"].append(Arc(m.group(1), guard, m.group(2)))
        else:
            raise ModelSyntaxError(f"unknown keyword {word!r}", lineno, source)

    auts = []
    for a in automata:
        initial = a["initial"] or (a["states"][0] if a["states"] else "")
        auts.append(Automaton(a["name"], tuple(a["states"]), initial,
                              dict(a["outputs"]), tuple(a["arcs"])))
    return System(tuple(auts), frozenset(external))


def fixture_names() -> list[str]:
    folder = resources.files("cbscheck") / "fixtures"
    return sorted(p.name[:-4] for p in folder.iterdir() if p.name.endswith(".csm"))


def fixture_text(name: str) -> str:
    return (resources.files("cbscheck") / "fixtures" / f"{name}.csm").read_text()


def load_model(ref: Union[str, Path]) -> System:
    """Load a model from a file path, or from a bundled fixture by name."""
    path = Path(ref)
    if path.exists():
        return parse_model(path.read_text(), str(path))
    if str(ref) in fixture_names():
        return parse_model(fixture_text(str(ref)), f"fixture:{ref}")
    raise FileNotFoundError(f"no model file or bundled fixture named {str(ref)!r}")
