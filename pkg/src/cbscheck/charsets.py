"""Characteristic sets of a state: future, past and their combinations.

``future(s)`` holds the states reachable from ``s`` by a path of at least one
arc, so ``s`` belongs to its own future only when it lies on a cycle.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .rg import RGraph

__all__ = ["CharSets", "future", "past", "char_sets", "reach", "identity_violations"]


def reach(adj: Sequence[Sequence[int]], start: int) -> set[int]:
    """States reachable from ``start`` by one or more steps of ``adj``."""
    seen: set[int] = set()
    queue = deque(adj[start])
    seen.update(adj[start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def _check(rg: RGraph, s: int) -> None:
    if not 0 <= s < len(rg.states):
        raise KeyError(f"unknown state id {s}")


def future(rg: RGraph, s: int) -> frozenset[int]:
    _check(rg, s)
    return frozenset(reach(rg.succ, s))


def past(rg: RGraph, s: int) -> frozenset[int]:
    _check(rg, s)
    return frozenset(reach(rg.pred, s))


@dataclass(frozen=True)
class CharSets:
    state: int
    fut: frozenset[int]
    pas: frozenset[int]
    cyc: frozenset[int]
    end_: frozenset[int]
    beg: frozenset[int]
    gs: int

    @property
    def on_cycle(self) -> bool:
        return self.state in self.cyc

    def get(self, kind: str) -> frozenset[int]:
        """Look a set up by its upper-case tag (FUT, PAS, CYC, END, BEG)."""
        return {"FUT": self.fut, "PAS": self.pas, "CYC": self.cyc,
                "END": self.end_, "BEG": self.beg}[kind]


def char_sets(rg: RGraph, s: int) -> CharSets:
    fut = future(rg, s)
    pas = past(rg, s)
    return CharSets(s, fut, pas, fut & pas, fut - pas, pas - fut, len(rg.states))


def identity_violations(cs: CharSets) -> list[str]:
    """Names of the set identities that ``cs`` fails (empty when consistent)."""
    checks = {
        "cyc = fut & pas": cs.cyc == cs.fut & cs.pas,
        "end = fut - pas": cs.end_ == cs.fut - cs.pas,
        "beg = pas - fut": cs.beg == cs.pas - cs.fut,
        "beg = pas - cyc": cs.beg == cs.pas - cs.cyc,
        "end = fut - cyc": cs.end_ == cs.fut - cs.cyc,
    }
    return [name for name, ok in checks.items() if not ok]
