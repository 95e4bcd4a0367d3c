"""Bottom-up CTL labeling by fixed points.

Every sub-formula is labeled with the full set of states satisfying it,
innermost first.  This is the classical evaluation scheme; it is kept
deliberately plain and serves as the reference the sphere engine is
checked against.
"""

from __future__ import annotations

from typing import Mapping, Optional

from . import qsctl as q
from .rg import RGraph

__all__ = ["Labeling", "label", "label_set", "UnsupportedFormula"]


class UnsupportedFormula(ValueError):
    pass


class Labeling:
    """Satisfaction sets of the nodes of one formula tree.

    Nodes are looked up by identity, so the formula object given to
    :func:`label` must be the one queried.  ``iterations`` records the
    number of rounds that changed the iterate, per fixed-point computation.
    """

    def __init__(self, rg: RGraph, root: q.Formula):
        self.rg = rg
        self.root = root
        self._sets: dict[tuple[int, tuple], frozenset[int]] = {}
        self._nodes: list[q.Formula] = []
        self.iterations: list[int] = []

    def __getitem__(self, node: q.Formula) -> frozenset[int]:
        return self.get(node)

    def get(self, node: q.Formula, env: Optional[Mapping[str, int]] = None) -> frozenset[int]:
        return self._sets[(id(node), _env_key(env))]

    def holds(self, node: q.Formula, s: int, env: Optional[Mapping[str, int]] = None) -> bool:
        return s in self.get(node, env)

    def _put(self, node, env, value):
        self._nodes.append(node)
        self._sets[(id(node), _env_key(env))] = value


def _env_key(env) -> tuple:
    return tuple(sorted(env.items())) if env else ()


class _Graph:
    """Plain adjacency lists rebuilt from the arc list."""

    def __init__(self, rg: RGraph):
        n = len(rg.states)
        self.n = n
        self.all = frozenset(range(n))
        self.post = [set() for _ in range(n)]
        self.pre = [set() for _ in range(n)]
        for arc in rg.arcs:
            self.post[arc.src].add(arc.dst)
            self.pre[arc.dst].add(arc.src)

    def pre_forall(self, z: frozenset[int]) -> frozenset[int]:
        """States all of whose successors lie in ``z``."""
        return frozenset(s for s in range(self.n) if self.post[s] <= z)

    def pre_exists(self, z: frozenset[int]) -> frozenset[int]:
        out = set()
        for t in z:
            out |= self.pre[t]
        return frozenset(out)


def label(rg: RGraph, f: q.Formula) -> Labeling:
    """Label every node of ``f`` over all states of ``rg``.

    Quantifiers must have static ranges; they are expanded over their range
    with the bound variable fixed in turn.  A range that mentions a
    variable raises :class:`UnsupportedFormula`.
    """
    for quant, static in q.quantifier_ranges(f):
        if not static:
            raise UnsupportedFormula(
                f"quantifier range {quant.range} of variable {quant.var} is dynamic; "
                "bottom-up labeling needs ranges known before evaluation")
    lab = Labeling(rg, f)
    g = _Graph(rg)
    _label(f, {}, rg, g, lab)
    return lab


def label_set(rg: RGraph, f: q.Formula) -> frozenset[int]:
    """States satisfying ``f``."""
    return label(rg, f)[f]


def _lfp(step, iterations: list[int]) -> frozenset[int]:
    z: frozenset[int] = frozenset()
    rounds = 0
    while True:
        rounds += 1
        nz = step(z)
        if nz == z:
            iterations.append(rounds - 1)
            return z
        z = nz


def _gfp(step, universe: frozenset[int], iterations: list[int]) -> frozenset[int]:
    z = universe
    rounds = 0
    while True:
        rounds += 1
        nz = step(z)
        if nz == z:
            iterations.append(rounds - 1)
            return z
        z = nz


def _label(f: q.Formula, env: dict, rg: RGraph, g: _Graph, lab: Labeling) -> frozenset[int]:
    key = (id(f), _env_key(env))
    if key in lab._sets:
        return lab._sets[key]
    states = rg.states
    if isinstance(f, q.Const):
        out = g.all if f.value else frozenset()
    elif isinstance(f, q.SignalAtom):
        out = frozenset(i for i, st in enumerate(states) if f.name in st.outputs)
    elif isinstance(f, q.InState):
        out = frozenset({q.resolve_state(f.term, rg, env)})
    elif isinstance(f, q.InSet):
        out = q.resolve_set(f.expr, rg, env)
    elif isinstance(f, q.InProj):
        k = rg.components.index(f.automaton)
        out = frozenset(i for i, st in enumerate(states) if st.locals[k] == f.local)
    elif isinstance(f, q.Neg):
        out = g.all - _label(f.child, env, rg, g, lab)
    elif isinstance(f, q.Conj):
        out = g.all
        for c in f.children:
            out = out & _label(c, env, rg, g, lab)
    elif isinstance(f, q.Disj):
        out = frozenset()
        for c in f.children:
            out = out | _label(c, env, rg, g, lab)
    elif isinstance(f, q.Implies):
        out = (g.all - _label(f.left, env, rg, g, lab)) | _label(f.right, env, rg, g, lab)
    elif isinstance(f, q.AX):
        out = g.pre_forall(_label(f.child, env, rg, g, lab))
    elif isinstance(f, q.AG):
        phi = _label(f.child, env, rg, g, lab)
        out = _gfp(lambda z: phi & g.pre_forall(z), g.all, lab.iterations)
    elif isinstance(f, q.AF):
        phi = _label(f.child, env, rg, g, lab)
        out = _lfp(lambda z: phi | g.pre_forall(z), lab.iterations)
    elif isinstance(f, q.AUw):
        phi = _label(f.left, env, rg, g, lab)
        psi = _label(f.right, env, rg, g, lab)
        # A[phi W psi] = not E[not psi U (not phi and not psi)]
        through = g.all - psi
        target = g.all - (phi | psi)
        bad = _lfp(lambda z: target | (through & g.pre_exists(z)), lab.iterations)
        out = g.all - bad
    elif isinstance(f, q.AXa):
        out = _label_local_next(f, env, rg, g, lab)
    elif isinstance(f, q.Quant):
        members = sorted(q.resolve_set(f.range, rg, env))
        if f.kind == "forall":
            out = g.all
            for u in members:
                out = out & _label(f.body, {**env, f.var: u}, rg, g, lab)
        else:
            out = frozenset()
            for u in members:
                out = out | _label(f.body, {**env, f.var: u}, rg, g, lab)
    else:
        raise UnsupportedFormula(f"cannot label {f!r}")
    lab._put(f, env, out)
    return out


def _label_local_next(f: q.AXa, env, rg: RGraph, g: _Graph, lab: Labeling) -> frozenset[int]:
    # a state fails when, moving only through arcs where the component stays,
    # it can reach an arc where the component moves into a non-phi state
    phi = _label(f.child, env, rg, g, lab)
    k = rg.components.index(f.automaton)
    stay_pre = [set() for _ in range(g.n)]
    seeds = set()
    for arc in rg.arcs:
        if arc.moved[k]:
            if arc.dst not in phi:
                seeds.add(arc.src)
        else:
            stay_pre[arc.dst].add(arc.src)
    seeds = frozenset(seeds)

    def step(z):
        grown = set(seeds)
        for t in z:
            grown |= stay_pre[t]
        return frozenset(grown)

    bad = _lfp(step, lab.iterations)
    return g.all - bad
