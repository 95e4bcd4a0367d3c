"""Graph and formula generators plus an independent witness checker."""

from __future__ import annotations

import math
import random
from typing import Optional, Sequence

from cbscheck import qsctl as q
from cbscheck.cbs import Witness
from cbscheck.guards import TRUE
from cbscheck.rg import GlobalState, RArc, RGraph

COMPONENTS = ("A", "B")
SIGNALS = ("p", "q", "r")


def graph_from_edges(n: int, edges: Sequence[tuple[int, int]], outputs=None,
                     names=None, locals_=None) -> RGraph:
    """An RG@-shaped graph; states without out-arcs get a terminal self-loop."""
    outputs = outputs or [frozenset()] * n
    locals_ = locals_ or [(f"a{i}", "b0") for i in range(n)]
    arcs = []
    for u, v in edges:
        moved = tuple(x != y for x, y in zip(locals_[u], locals_[v]))
        arcs.append(RArc(u, v, TRUE, moved))
    has_out = {u for u, _ in edges}
    terminal = []
    for s in range(n):
        if s in has_out:
            terminal.append(all(v == s for u, v in edges if u == s))
        else:
            arcs.append(RArc(s, s, TRUE, (False,) * len(locals_[s])))
            terminal.append(True)
    states = tuple(GlobalState(tuple(l), frozenset(o)) for l, o in zip(locals_, outputs))
    return RGraph(COMPONENTS[:len(locals_[0])], states, 0, tuple(arcs), tuple(terminal),
                  tuple(names) if names else (), rg_at=True)


def random_rg(rng: random.Random, n: int, density: float = 1.2) -> RGraph:
    """A random RG@-shaped graph with ``n`` states, all reachable from state 0.

    Each state gets a distinct pair of local states for components A and B,
    so moved masks are determined by the endpoints, as in composed graphs.
    """
    side = math.isqrt(n) + 2
    cells = rng.sample([(i, j) for i in range(side) for j in range(side)], n)
    locals_ = [(f"a{i}", f"b{j}") for i, j in cells]
    outputs = [frozenset(s for s in SIGNALS if rng.random() < 0.45) for _ in range(n)]
    edges = set()
    for v in range(1, n):
        edges.add((rng.randrange(v), v))
    for _ in range(int(density * n)):
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v:
            edges.add((u, v))
    # leave a few states without out-arcs so terminal self-loops occur
    for u in range(n):
        if rng.random() < 0.08:
            edges = {e for e in edges if e[0] != u or e[1] == u}
    reach = {0}
    frontier = [0]
    while frontier:
        u = frontier.pop()
        for a, b in edges:
            if a == u and b not in reach:
                reach.add(b)
                frontier.append(b)
    keep = sorted(reach)
    remap = {old: new for new, old in enumerate(keep)}
    edges = sorted((remap[a], remap[b]) for a, b in edges if a in reach and b in reach)
    return graph_from_edges(len(keep), edges,
                            outputs=[outputs[i] for i in keep],
                            locals_=[locals_[i] for i in keep])


def random_formula(rng: random.Random, rg: RGraph, depth: int) -> q.Formula:
    """A random quantifier-free formula of nesting depth at most ``depth``."""
    if depth == 0 or rng.random() < 0.2:
        roll = rng.random()
        if roll < 0.7:
            return q.SignalAtom(rng.choice(SIGNALS))
        if roll < 0.85:
            k = rng.randrange(len(rg.components))
            local = rng.choice(sorted({st.locals[k] for st in rg.states}))
            return q.InProj(rg.components[k], local)
        if roll < 0.95:
            return q.InState(q.StateTerm(rng.choice(rg.names)))
        return q.Const(rng.random() < 0.5)
    d = depth - 1
    op = rng.choice(("AG", "AF", "AX", "AUw", "AXa", "not", "and", "or", "imp"))
    if op == "AG":
        return q.AG(random_formula(rng, rg, d))
    if op == "AF":
        return q.AF(random_formula(rng, rg, d))
    if op == "AX":
        return q.AX(random_formula(rng, rg, d))
    if op == "AUw":
        return q.AUw(random_formula(rng, rg, d), random_formula(rng, rg, d))
    if op == "AXa":
        return q.AXa(rng.choice(rg.components), random_formula(rng, rg, d))
    if op == "not":
        return q.Neg(random_formula(rng, rg, d))
    if op == "and":
        return q.Conj((random_formula(rng, rg, d), random_formula(rng, rg, d)))
    if op == "or":
        return q.Disj((random_formula(rng, rg, d), random_formula(rng, rg, d)))
    return q.Implies(random_formula(rng, rg, d), random_formula(rng, rg, d))


def depth_of(f: q.Formula) -> int:
    kids = q.children(f)
    return 0 if not kids else 1 + max(depth_of(c) for c in kids)


# -- witness re-validation ---------------------------------------------------

def _arc_exists(rg: RGraph, u: int, v: int, moved_k: Optional[tuple[int, bool]] = None) -> bool:
    for arc in rg.arcs:
        if arc.src == u and arc.dst == v:
            if moved_k is None or arc.moved[moved_k[0]] == moved_k[1]:
                return True
    return False


def confirms(rg: RGraph, lab, f: q.Formula, s: int, w: Optional[Witness], env=None) -> bool:
    """Walk the graph along ``w`` and confirm that ``f`` is false at ``s``.

    Local conditions come from the oracle labeling ``lab``; arcs are looked
    up in the raw arc list, not in the engine's adjacency caches.
    """
    env = env or {}
    if w is None or not w.path or w.path[0] != s:
        return False

    def sat(node, t, e=env):
        return t in lab.get(node, e)

    if w.formula is not f:
        if isinstance(f, q.Conj):
            return any(confirms(rg, lab, c, s, w, env) for c in f.children)
        if isinstance(f, q.Implies):
            return sat(f.left, s) and confirms(rg, lab, f.right, s, w, env)
        return False

    path = w.path
    if isinstance(f, (q.AG, q.AUw)):
        phi = f.child if isinstance(f, q.AG) else f.left
        psi = None if isinstance(f, q.AG) else f.right
        if not all(_arc_exists(rg, a, b) for a, b in zip(path, path[1:])):
            return False
        for t in path[:-1]:
            if not sat(phi, t) or (psi is not None and sat(psi, t)):
                return False
        last = path[-1]
        if sat(phi, last) or (psi is not None and sat(psi, last)):
            return False
        return confirms(rg, lab, phi, last, w.cause, env)
    if isinstance(f, q.AF):
        if w.loop_start is None:
            return False
        steps = list(zip(path, path[1:])) + [(path[-1], path[w.loop_start])]
        return (all(_arc_exists(rg, a, b) for a, b in steps)
                and not any(sat(f.child, t) for t in path))
    if isinstance(f, q.AX):
        return (len(path) == 2 and _arc_exists(rg, path[0], path[1])
                and not sat(f.child, path[1])
                and confirms(rg, lab, f.child, path[1], w.cause, env))
    if isinstance(f, q.AXa):
        k = rg.components.index(f.automaton)
        if len(path) < 2:
            return False
        stays = all(_arc_exists(rg, a, b, (k, False)) for a, b in zip(path[:-2], path[1:-1]))
        moves = _arc_exists(rg, path[-2], path[-1], (k, True))
        return (stays and moves and not sat(f.child, path[-1])
                and confirms(rg, lab, f.child, path[-1], w.cause, env))
    if isinstance(f, q.Quant):
        if f.kind == "exists":
            return path == (s,) and not sat(f, s)
        var, u = w.binding
        inner = {**env, var: u}
        return (u in q.resolve_set(f.range, rg, env)
                and confirms(rg, lab, f.body, s, w.cause, inner))
    # non-temporal: a single state where the oracle says the node is false
    return path == (s,) and not sat(f, s)
