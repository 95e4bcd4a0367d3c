"""Reachability graphs of CSM systems.

:func:`compose` explores the lock-step product of a system's automata
breadth-first; :func:`to_rg_at` then drops the ears of non-terminal states,
which yields the succession relation temporal formulas are evaluated over.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

from .guards import TRUE, Guard, conj, disj, normalize, satisfiable_under
from .model import ModelError, System, signals_of, validate_system

__all__ = ["GlobalState", "RArc", "RGraph", "ResourceLimitError", "compose",
           "to_rg_at", "export_dot", "export_json", "DEFAULT_STATE_LIMIT"]

DEFAULT_STATE_LIMIT = 1_000_000


class ResourceLimitError(RuntimeError):
    def __init__(self, limit: int):
        super().__init__(f"state-count limit of {limit} global states exceeded")
        self.limit = limit


@dataclass(frozen=True)
class GlobalState:
    locals: tuple[str, ...]
    outputs: frozenset[str]


@dataclass(frozen=True)
class RArc:
    src: int
    dst: int
    guard: Guard
    moved: tuple[bool, ...]

    @property
    def is_loop(self) -> bool:
        return self.src == self.dst


@dataclass(frozen=True, eq=False)
class RGraph:
    """An immutable reachability graph with integer state ids ``0..n-1``."""

    components: tuple[str, ...]
    states: tuple[GlobalState, ...]
    initial: int
    arcs: tuple[RArc, ...]
    terminal: tuple[bool, ...]
    names: tuple[str, ...] = ()
    rg_at: bool = False

    def __post_init__(self):
        if not self.names:
            object.__setattr__(self, "names", _state_names(self.states))

    def __len__(self) -> int:
        return len(self.states)

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    @cached_property
    def out_arcs(self) -> tuple[tuple[RArc, ...], ...]:
        buckets: list[list[RArc]] = [[] for _ in self.states]
        for arc in self.arcs:
            buckets[arc.src].append(arc)
        return tuple(map(tuple, buckets))

    @cached_property
    def succ(self) -> tuple[tuple[int, ...], ...]:
        """Distinct successors of every state, in arc order."""
        return tuple(tuple(dict.fromkeys(a.dst for a in arcs)) for arcs in self.out_arcs)

    @cached_property
    def pred(self) -> tuple[tuple[int, ...], ...]:
        buckets: list[dict[int, None]] = [{} for _ in self.states]
        for arc in self.arcs:
            buckets[arc.dst][arc.src] = None
        return tuple(tuple(b) for b in buckets)

    @cached_property
    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def state_id(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise KeyError(f"no global state named {name!r}") from None

    def component_index(self, automaton: str) -> int:
        try:
            return self.components.index(automaton)
        except ValueError:
            raise KeyError(f"no automaton named {automaton!r}") from None

    def outputs(self, s: int) -> frozenset[str]:
        return self.states[s].outputs

    def has_loop(self, s: int) -> bool:
        return s in self.succ[s]


def _state_names(states: Sequence[GlobalState]) -> tuple[str, ...]:
    names = []
    seen = set()
    for i, st in enumerate(states):
        name = "_".join(st.locals) if st.locals else f"g{i}"
        if name in seen:
            name = f"{name}#{i}"
        seen.add(name)
        names.append(name)
    return tuple(names)


def compose(system: System, state_limit: int = DEFAULT_STATE_LIMIT) -> RGraph:
    """Build the reachability graph of ``system``.

    Internal signals take the closed-world valuation of each global state
    (emitted means active, otherwise inactive); external signals are free.
    A joint transition is added whenever the conjunction of the component
    guards is satisfiable for some external valuation.
    """
    diags = validate_system(system)
    if diags:
        raise ModelError(diags)
    internal, external = signals_of(system)
    auts = system.automata
    arcs_by_state = [{st: aut.arcs_from(st) for st in aut.states} for aut in auts]

    def outputs_of(locals_):
        return frozenset().union(*(a.emits(l) for a, l in zip(auts, locals_)))

    start = tuple(a.initial for a in auts)
    ids = {start: 0}
    order = [start]
    raw_arcs: list[tuple[int, int, Guard, tuple[bool, ...]]] = []
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        src = ids[cur]
        emitted = outputs_of(cur)
        fixed = {sig: sig in emitted for sig in internal}
        choices = [arcs_by_state[k][l] for k, l in enumerate(cur)]
        for combo in itertools.product(*choices):
            guard = conj(*(a.guard for a in combo))
            ok, _ = satisfiable_under(guard, fixed, external)
            if not ok:
                continue
            nxt = tuple(a.dst for a in combo)
            if nxt not in ids:
                if len(ids) >= state_limit:
                    raise ResourceLimitError(state_limit)
                ids[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            moved = tuple(not a.is_ear for a in combo)
            raw_arcs.append((src, ids[nxt], guard, moved))

    states = tuple(GlobalState(l, outputs_of(l)) for l in order)
    arcs = _merge_parallel(raw_arcs)
    return RGraph(
        components=tuple(a.name for a in auts),
        states=states,
        initial=0,
        arcs=arcs,
        terminal=_terminal_flags(len(states), arcs),
    )


def _merge_parallel(raw: Iterable[tuple[int, int, Guard, tuple[bool, ...]]]) -> tuple[RArc, ...]:
    # parallel arcs with equal moved masks are merged; differing masks stay apart
    merged: dict[tuple, list[Guard]] = {}
    for src, dst, guard, moved in raw:
        merged.setdefault((src, dst, moved), []).append(guard)
    return tuple(RArc(src, dst, normalize(disj(*gs)), moved)
                 for (src, dst, moved), gs in merged.items())


def _terminal_flags(n: int, arcs: Sequence[RArc]) -> tuple[bool, ...]:
    leaves = [True] * n
    for arc in arcs:
        if not arc.is_loop:
            leaves[arc.src] = False
    return tuple(leaves)


def to_rg_at(rg: RGraph) -> RGraph:
    """Remove ears of non-terminal states; keep one self-loop per terminal state."""
    terminal = _terminal_flags(len(rg.states), rg.arcs)
    kept: list[Optional[RArc]] = []
    loop_slot: dict[int, int] = {}
    loops: dict[int, list[RArc]] = {}
    for arc in rg.arcs:
        if not arc.is_loop:
            kept.append(arc)
        elif terminal[arc.src]:
            if arc.src not in loop_slot:
                loop_slot[arc.src] = len(kept)
                kept.append(None)
            loops.setdefault(arc.src, []).append(arc)
    for s, group in loops.items():
        mask = tuple(any(bits) for bits in zip(*(a.moved for a in group)))
        guard = group[0].guard if len(group) == 1 else normalize(disj(*(a.guard for a in group)))
        kept[loop_slot[s]] = RArc(s, s, guard, mask)
    # an arc-less state cannot come out of compose; give it an ear to keep totality
    for s in range(len(rg.states)):
        if terminal[s] and s not in loops:
            kept.append(RArc(s, s, TRUE, (False,) * len(rg.components)))
    return RGraph(rg.components, rg.states, rg.initial, tuple(kept), terminal,
                  rg.names, rg_at=True)


# -- exports -----------------------------------------------------------------

def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(rg: RGraph, name: str = "RG") -> str:
    """Render ``rg`` as DOT text; output is byte-stable for equal graphs."""
    lines = [f"digraph {_dot_quote(name)} {{", "  rankdir=LR;"]
    for i, st in enumerate(rg.states):
        label = f"{rg.names[i]}\\n{{{', '.join(sorted(st.outputs))}}}"
        attrs = [f"label={_dot_quote(label)}"]
        if i == rg.initial:
            attrs.append("penwidth=2")
        if rg.terminal[i]:
            attrs.append("shape=doublecircle")
        lines.append(f"  s{i} [{', '.join(attrs)}];")
    for arc in rg.arcs:
        lines.append(f"  s{arc.src} -> s{arc.dst} [label={_dot_quote(str(arc.guard))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_dict(rg: RGraph) -> dict:
    return {
        "components": list(rg.components),
        "rg_at": rg.rg_at,
        "initial": rg.names[rg.initial],
        "states": [
            {
                "id": i,
                "name": rg.names[i],
                "locals": list(st.locals),
                "outputs": sorted(st.outputs),
                "terminal": rg.terminal[i],
            }
            for i, st in enumerate(rg.states)
        ],
        "arcs": [
            {
                "from": rg.names[a.src],
                "to": rg.names[a.dst],
                "guard": str(a.guard),
                "moved": [rg.components[k] for k, m in enumerate(a.moved) if m],
            }
            for a in rg.arcs
        ],
    }


def export_json(rg: RGraph, indent: Optional[int] = 2) -> str:
    return json.dumps(graph_dict(rg), indent=indent, sort_keys=True) + "\n"
