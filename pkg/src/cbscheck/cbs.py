"""Top-down evaluation of QsCTL formulas by sphere expansion.

:func:`run_cbs` is the generic rule.  Starting from a seed sphere it scans
each sphere for a state satisfying ``cond1`` (which ends the search with
``cond1res``), then collects the unvisited successors of the states
satisfying ``cond2`` into the next sphere.  An empty sphere ends the search
with ``cond2res``.

:class:`Evaluator` instantiates the rule for each temporal operator and
evaluates sub-formulas only at the states a search actually reaches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import AbstractSet, Callable, Iterable, Mapping, Optional, Sequence

from . import qsctl as q
from .rg import RGraph

__all__ = ["CbsSpec", "CbsStats", "CbsOutcome", "run_cbs", "extract_witness",
           "Witness", "EvalStats", "CheckResult", "Evaluator", "check"]

StatePred = Callable[[int], bool]


@dataclass
class CbsSpec:
    """One sphere search.

    ``src`` restricts the states admitted into spheres; ``None`` admits
    everything reachable from the seed.  ``successors`` replaces the graph's
    successor relation (used for component-local next).
    """

    seed: Sequence[int]
    cond1: StatePred
    cond1res: bool
    cond2: StatePred
    cond2res: bool
    src: Optional[AbstractSet[int]] = None
    successors: Optional[Callable[[int], Iterable[int]]] = None


@dataclass
class CbsStats:
    spheres_built: int = 0
    states_visited: int = 0
    arcs_followed: int = 0


@dataclass
class CbsOutcome:
    verdict: bool
    trigger: Optional[int]
    witness: Optional[tuple[int, ...]]
    stats: CbsStats
    parent: dict[int, Optional[int]] = field(repr=False, default_factory=dict)
    expanded: list[int] = field(repr=False, default_factory=list)
    spheres: Optional[list[list[int]]] = field(repr=False, default=None)
    followed: Optional[list[tuple[int, int]]] = field(repr=False, default=None)
    loop_start: Optional[int] = None


def _path_to(parent: Mapping[int, Optional[int]], t: int) -> tuple[int, ...]:
    path = [t]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return tuple(reversed(path))


def run_cbs(rg: RGraph, spec: CbsSpec, trace: bool = False) -> CbsOutcome:
    """Run the sphere rule described by ``spec`` on ``rg``.

    With ``trace`` the outcome also lists every sphere (the final empty one
    included) and every arc followed.
    """
    src = spec.src
    succ = spec.successors or rg.succ.__getitem__
    parent: dict[int, Optional[int]] = {}
    sphere: list[int] = []
    for s in spec.seed:
        if s not in parent and (src is None or s in src):
            parent[s] = None
            sphere.append(s)
    stats = CbsStats()
    expanded: list[int] = []
    spheres = [] if trace else None
    followed = [] if trace else None
    cond1, cond2 = spec.cond1, spec.cond2

    while sphere:
        stats.spheres_built += 1
        stats.states_visited += len(sphere)
        if spheres is not None:
            spheres.append(list(sphere))
        for s in sphere:
            if cond1(s):
                return CbsOutcome(spec.cond1res, s, _path_to(parent, s), stats,
                                  parent, expanded, spheres, followed)
        nxt: list[int] = []
        for s in sphere:
            if not cond2(s):
                continue
            expanded.append(s)
            for t in succ(s):
                stats.arcs_followed += 1
                if followed is not None:
                    followed.append((s, t))
                if t in parent or (src is not None and t not in src):
                    continue
                parent[t] = s
                nxt.append(t)
        sphere = nxt

    if spheres is not None:
        spheres.append([])
    return CbsOutcome(spec.cond2res, None, None, stats, parent, expanded, spheres, followed)


def extract_witness(outcome: CbsOutcome) -> Optional[tuple[int, ...]]:
    """The counterexample path of a false outcome, ``None`` for true ones.

    For lassos ``outcome.loop_start`` indexes the state the last one loops
    back to.
    """
    if outcome.verdict:
        return None
    return outcome.witness


def _find_cycle(nodes: Sequence[int], succ: Callable[[int], Iterable[int]]) -> Optional[list[int]]:
    """A cycle inside the subgraph induced by ``nodes``, as a list of states."""
    inside = set(nodes)
    color: dict[int, int] = {}  # 1 on stack, 2 done
    for root in nodes:
        if root in color:
            continue
        color[root] = 1
        stack = [(root, iter(succ(root)))]
        while stack:
            u, it = stack[-1]
            for v in it:
                if v not in inside:
                    continue
                c = color.get(v)
                if c == 1:
                    on_stack = [w for w, _ in stack]
                    return on_stack[on_stack.index(v):]
                if c is None:
                    color[v] = 1
                    stack.append((v, iter(succ(v))))
                    break
            else:
                color[u] = 2
                stack.pop()
    return None


# -- evaluation --------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    """Why ``formula`` is false at ``path[0]``.

    For temporal operators ``path`` walks the graph to the offending state
    (the last one); ``cause`` then explains the failure of the operand there.
    A lasso (``loop_start`` set) continues forever by jumping from the last
    state back to ``path[loop_start]``.  Non-temporal failures carry the
    single state.
    """

    formula: q.Formula
    path: tuple[int, ...]
    loop_start: Optional[int] = None
    cause: Optional["Witness"] = None
    binding: Optional[tuple[str, int]] = None

    @property
    def is_lasso(self) -> bool:
        return self.loop_start is not None


@dataclass
class EvalStats:
    cbs_runs: int = 0
    spheres_built: int = 0
    states_visited: int = 0
    arcs_followed: int = 0
    inner_evaluations: int = 0
    memo_hits: int = 0

    def add(self, run: CbsStats) -> None:
        self.cbs_runs += 1
        self.spheres_built += run.spheres_built
        self.states_visited += run.states_visited
        self.arcs_followed += run.arcs_followed


@dataclass
class CheckResult:
    verdict: bool
    witness: Optional[Witness]
    stats: EvalStats


RunHook = Callable[[str, int, CbsSpec, CbsOutcome], None]


class Evaluator:
    """Evaluates formulas on one graph, sharing a memo across calls.

    ``on_run`` is called after every sphere search with the operator name,
    the anchor state, the spec and the outcome; ``trace`` makes those
    outcomes carry their spheres and followed arcs.
    """

    def __init__(self, rg: RGraph, memo: bool = True, trace: bool = False,
                 on_run: Optional[RunHook] = None):
        self.rg = rg
        self.stats = EvalStats()
        self.trace = trace
        self.on_run = on_run
        self._memo: Optional[dict] = {} if memo else None
        self._free: dict[int, tuple[q.Formula, tuple[str, ...]]] = {}
        self._sets: dict[tuple, frozenset[int]] = {}
        self._local_succ: dict[int, tuple[tuple[int, ...], ...]] = {}

    # public API
    def check(self, f: q.Formula, state: Optional[int] = None,
              env: Optional[Mapping[str, int]] = None) -> CheckResult:
        s = self.rg.initial if state is None else state
        verdict, witness = self._eval(f, s, dict(env or {}))
        return CheckResult(verdict, witness, self.stats)

    def holds(self, f: q.Formula, s: int, env: Optional[Mapping[str, int]] = None) -> bool:
        return self._eval(f, s, env or {})[0]

    # memoized dispatch
    def _key(self, f: q.Formula, s: int, env: Mapping[str, int]):
        entry = self._free.get(id(f))
        if entry is None:
            entry = (f, tuple(sorted(q.free_vars(f))))
            self._free[id(f)] = entry
        return (id(f), s, tuple(env.get(v) for v in entry[1]))

    def _eval(self, f: q.Formula, s: int, env: Mapping[str, int]):
        if isinstance(f, q.Const):
            return f.value, (None if f.value else Witness(f, (s,)))
        if isinstance(f, q.SignalAtom):
            ok = f.name in self.rg.states[s].outputs
            return ok, (None if ok else Witness(f, (s,)))
        memo = self._memo
        if memo is not None:
            key = self._key(f, s, env)
            hit = memo.get(key)
            if hit is not None:
                self.stats.memo_hits += 1
                return hit
        self.stats.inner_evaluations += 1
        result = self._dispatch(f, s, env)
        if memo is not None:
            memo[key] = result
        return result

    def _dispatch(self, f: q.Formula, s: int, env: Mapping[str, int]):
        rg = self.rg
        if isinstance(f, q.InState):
            ok = q.resolve_state(f.term, rg, env) == s
        elif isinstance(f, q.InProj):
            ok = rg.states[s].locals[rg.component_index(f.automaton)] == f.local
        elif isinstance(f, q.InSet):
            ok = s in self._resolve(f.expr, env)
        elif isinstance(f, q.Neg):
            ok = not self._eval(f.child, s, env)[0]
        elif isinstance(f, q.Disj):
            ok = any(self._eval(c, s, env)[0] for c in f.children)
        elif isinstance(f, q.Conj):
            for c in f.children:
                ok, w = self._eval(c, s, env)
                if not ok:
                    return False, w
            return True, None
        elif isinstance(f, q.Implies):
            # a false antecedent settles it without touching the consequent
            if not self._eval(f.left, s, env)[0]:
                return True, None
            return self._eval(f.right, s, env)
        elif isinstance(f, q.AG):
            return self._until(f, f.child, None, s, env)
        elif isinstance(f, q.AUw):
            return self._until(f, f.left, f.right, s, env)
        elif isinstance(f, q.AF):
            return self._eventually(f, s, env)
        elif isinstance(f, q.AX):
            return self._next(f, s, env)
        elif isinstance(f, q.AXa):
            return self._next_local(f, s, env)
        elif isinstance(f, q.Quant):
            return self._quant(f, s, env)
        else:
            raise TypeError(f"cannot evaluate {f!r}")
        return ok, (None if ok else Witness(f, (s,)))

    def _resolve(self, expr: q.SetExpr, env: Mapping[str, int]) -> frozenset[int]:
        names = tuple(sorted(q._set_vars(expr)))
        key = (id(expr), tuple(env.get(v) for v in names))
        hit = self._sets.get(key)
        if hit is None:
            hit = self._sets[key] = q.resolve_set(expr, self.rg, env)
            self._free.setdefault(id(expr), (expr, names))  # keeps expr alive
        return hit

    def _run(self, op: str, s: int, spec: CbsSpec) -> CbsOutcome:
        outcome = run_cbs(self.rg, spec, trace=self.trace)
        self.stats.add(outcome.stats)
        if self.on_run is not None:
            self.on_run(op, s, spec, outcome)
        return outcome

    # operators
    def _until(self, f, phi, psi, s, env):
        """AG when ``psi`` is None, weak until otherwise."""
        ev = self._eval
        if psi is None:
            spec = CbsSpec(
                seed=(s,),
                cond1=lambda t: not ev(phi, t, env)[0], cond1res=False,
                cond2=lambda t: ev(phi, t, env)[0], cond2res=True,
            )
            op = "AG"
        else:
            # expansion stops at psi-states: only the first one on a path matters
            spec = CbsSpec(
                seed=(s,),
                cond1=lambda t: not (ev(phi, t, env)[0] or ev(psi, t, env)[0]),
                cond1res=False,
                cond2=lambda t: ev(phi, t, env)[0] and not ev(psi, t, env)[0],
                cond2res=True,
            )
            op = "AUw"
        out = self._run(op, s, spec)
        if out.verdict:
            return True, None
        t = out.trigger
        return False, Witness(f, out.witness, cause=ev(phi, t, env)[1])

    def _eventually(self, f, s, env):
        ev = self._eval
        phi = f.child
        rg = self.rg

        def bad(t):
            return not ev(phi, t, env)[0]

        spec = CbsSpec(
            seed=(s,),
            # a not-phi state looping on itself is a cycle avoiding phi
            cond1=lambda t: bad(t) and rg.has_loop(t), cond1res=False,
            cond2=bad, cond2res=True,
        )
        out = self._run("AF", s, spec)
        if not out.verdict:
            path = out.witness
            out.loop_start = len(path) - 1
            return False, Witness(f, path, loop_start=out.loop_start)
        # the expanded states are the not-phi states reachable through not-phi states
        cycle = _find_cycle(out.expanded, rg.succ.__getitem__)
        if cycle is None:
            return True, None
        stem = _path_to(out.parent, cycle[0])
        out.verdict = False
        out.witness = stem + tuple(cycle[1:])
        out.loop_start = len(stem) - 1
        return False, Witness(f, out.witness, loop_start=out.loop_start)

    def _next(self, f, s, env):
        for t in self.rg.succ[s]:
            ok, w = self._eval(f.child, t, env)
            if not ok:
                return False, Witness(f, (s, t), cause=w)
        return True, None

    def _local_successors(self, k: int) -> tuple[tuple[int, ...], ...]:
        table = self._local_succ.get(k)
        if table is None:
            table = tuple(tuple(dict.fromkeys(a.dst for a in arcs if not a.moved[k]))
                          for arcs in self.rg.out_arcs)
            self._local_succ[k] = table
        return table

    def _next_local(self, f, s, env):
        rg = self.rg
        k = rg.component_index(f.automaton)
        ev = self._eval
        phi = f.child
        culprit: dict[int, int] = {}

        def moves_into_bad(t):
            for arc in rg.out_arcs[t]:
                if arc.moved[k] and not ev(phi, arc.dst, env)[0]:
                    culprit[t] = arc.dst
                    return True
            return False

        spec = CbsSpec(
            seed=(s,),
            cond1=moves_into_bad, cond1res=False,
            cond2=lambda t: True, cond2res=True,
            successors=self._local_successors(k).__getitem__,
        )
        out = self._run("AXa", s, spec)
        if out.verdict:
            return True, None
        u = culprit[out.trigger]
        return False, Witness(f, out.witness + (u,), cause=ev(phi, u, env)[1])

    def _quant(self, f: q.Quant, s, env):
        members = sorted(self._resolve(f.range, env))
        forall = f.kind == "forall"
        for u in members:
            inner = dict(env)
            inner[f.var] = u
            ok, w = self._eval(f.body, s, inner)
            if forall and not ok:
                return False, Witness(f, (s,), cause=w, binding=(f.var, u))
            if not forall and ok:
                return True, None
        if forall:
            return True, None
        return False, Witness(f, (s,))


def check(rg: RGraph, f: q.Formula, state: Optional[int] = None,
          env: Optional[Mapping[str, int]] = None, **kwargs) -> CheckResult:
    """Evaluate ``f`` at ``state`` (default: the initial state) of ``rg``."""
    return Evaluator(rg, **kwargs).check(f, state, env)

