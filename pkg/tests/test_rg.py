import random

import pytest
from hypothesis import given, settings, strategies as st

from cbscheck.guards import TRUE, Not, Sig, conj, eval_guard, parse_guard, satisfiable_under
from cbscheck.model import Arc, Automaton, ModelError, System, signals_of, validate_system
from cbscheck.modelfile import load_model
from cbscheck.rg import RArc, RGraph, ResourceLimitError, compose, export_dot, export_json, to_rg_at

from helpers import graph_from_edges


def test_single_automaton_gives_isomorphic_graph():
    # state "dead" is unreachable and must not appear
    aut = Automaton("M", ("a", "b", "c", "dead"), "a", {"b": frozenset({"p"})}, (
        Arc("a", TRUE, "b"),
        Arc("b", TRUE, "c"),
        Arc("b", TRUE, "a"),
        Arc("c", TRUE, "c"),
        Arc("dead", TRUE, "a"),
    ))
    rg = compose(System((aut,)))
    assert rg.names == ("a", "b", "c")
    edges = {(rg.names[x.src], rg.names[x.dst]) for x in rg.arcs}
    assert edges == {("a", "b"), ("b", "c"), ("b", "a"), ("c", "c")}
    assert rg.outputs(rg.state_id("b")) == {"p"}


def test_outputs_are_union_of_component_outputs():
    one = Automaton("X", ("1",), "1", {"1": frozenset({"p", "q"})}, (Arc("1", TRUE, "1"),))
    three = Automaton("Y", ("3",), "3", {"3": frozenset({"q", "m"})}, (Arc("3", TRUE, "3"),))
    rg = compose(System((one, three)))
    assert rg.names == ("1_3",)
    assert rg.outputs(0) == {"p", "q", "m"}


def test_client_server_v1_has_the_narrative_states():
    rg = compose(load_model("clientserver_v1"))
    for name in ("req_idle", "req_servx", "req_answx", "wait_servx", "wait_answx", "wait_idle"):
        assert name in rg.index
    for name in ("req_idle", "req_servx", "req_answx"):
        assert "call" in rg.outputs(rg.state_id(name))


def test_client_server_v2_has_the_narrative_states():
    rg = compose(load_model("clientserver_v2"))
    for name in ("req_idle", "req_servx", "req_answx", "conf_answ"):
        assert name in rg.index
    assert "resp" in rg.outputs(rg.state_id("conf_answ"))


def test_closed_world_and_external_freedom():
    # B moves only when A emits p; A emits p in its second state
    a = Automaton("A", ("a0", "a1"), "a0", {"a1": frozenset({"p"})},
                  (Arc("a0", TRUE, "a1"), Arc("a1", TRUE, "a1")))
    b = Automaton("B", ("b0", "b1"), "b0", {}, (
        Arc("b0", parse_guard("p & e"), "b1"),
        Arc("b0", parse_guard("!(p & e)"), "b0"),
        Arc("b1", TRUE, "b1"),
    ))
    rg = compose(System((a, b), frozenset({"e"})))
    edges = {(rg.names[x.src], rg.names[x.dst]) for x in rg.arcs}
    # from a0_b0, p is inactive, so b cannot move yet
    assert ("a0_b0", "a1_b1") not in edges
    assert ("a0_b0", "a1_b0") in edges
    # from a1_b0, the external e decides: both outcomes are present
    assert {("a1_b0", "a1_b1"), ("a1_b0", "a1_b0")} <= edges


def test_moved_mask_marks_non_ears():
    rg = compose(load_model("clientserver_v1"))
    for arc in rg.arcs:
        src, dst = rg.states[arc.src].locals, rg.states[arc.dst].locals
        assert arc.moved == tuple(x != y for x, y in zip(src, dst))


def test_invalid_system_is_refused():
    aut = Automaton("A", ("s",), "s", {}, (Arc("s", Sig("a"), "s"),))
    with pytest.raises(ModelError):
        compose(System((aut,), frozenset({"a"})))


def test_state_limit():
    counter = Automaton("C", tuple(f"c{i}" for i in range(10)), "c0", {},
                        tuple(Arc(f"c{i}", TRUE, f"c{(i + 1) % 10}") for i in range(10)))
    assert len(compose(System((counter,)), state_limit=10).states) == 10
    with pytest.raises(ResourceLimitError) as exc:
        compose(System((counter,)), state_limit=9)
    assert exc.value.limit == 9


# -- RG@ ---------------------------------------------------------------------

def _raw(n, edges, mask=(False,)):
    arcs = tuple(RArc(u, v, TRUE, mask if u == v else (True,)) for u, v in edges)
    from cbscheck.rg import GlobalState
    states = tuple(GlobalState((f"s{i}",), frozenset()) for i in range(n))
    return RGraph(("M",), states, 0, arcs, tuple([False] * n))


def test_ear_of_non_terminal_state_is_removed():
    rg = to_rg_at(_raw(2, [(0, 0), (0, 1), (1, 0)]))
    assert [(a.src, a.dst) for a in rg.arcs] == [(0, 1), (1, 0)]
    assert rg.terminal == (False, False)


def test_state_with_only_an_ear_is_terminal_and_keeps_it():
    rg = to_rg_at(_raw(2, [(0, 1), (1, 1), (1, 1)]))
    assert rg.terminal == (False, True)
    assert [(a.src, a.dst) for a in rg.arcs] == [(0, 1), (1, 1)]


def test_graph_without_ears_is_unchanged():
    raw = _raw(3, [(0, 1), (1, 2), (2, 0)])
    rg = to_rg_at(raw)
    assert rg.arcs == raw.arcs


def random_system(rng: random.Random) -> System:
    n_aut = rng.randint(1, 3)
    auts = []
    internal_pool = ["p", "q", "r"]
    external = ["e", "f"]
    for k in range(n_aut):
        states = [f"s{i}" for i in range(rng.randint(1, 4))]
        outputs = {s: frozenset(x for x in internal_pool if rng.random() < 0.3) for s in states}
        arcs = []
        for s in states:
            sig = rng.choice(internal_pool + external)
            g = Sig(sig) if rng.random() < 0.5 else conj(Sig(sig), Sig(rng.choice(external)))
            arcs.append(Arc(s, g, rng.choice(states)))
            arcs.append(Arc(s, Not(g), rng.choice(states)))
            if rng.random() < 0.3:
                arcs.append(Arc(s, TRUE, s))
        auts.append(Automaton(f"M{k}", tuple(states), states[0], outputs, tuple(arcs)))
    internal = frozenset().union(*(a.internal_signals() for a in auts))
    # signals used but never emitted have to be external
    return System(tuple(auts), frozenset(external) | (frozenset(internal_pool) - internal))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_random_valid_systems(seed):
    sys_ = random_system(random.Random(seed))
    assert validate_system(sys_) == []
    rg = compose(sys_)
    internal, external = signals_of(sys_)
    out_deg = [0] * len(rg.states)
    for arc in rg.arcs:
        out_deg[arc.src] += 1
        fixed = {s: s in rg.outputs(arc.src) for s in internal}
        assert satisfiable_under(arc.guard, fixed, external)[0]
    # completeness of every component gives every global state a successor
    assert all(out_deg)
    for st_ in rg.states:
        emitted = set()
        for aut, local in zip(sys_.automata, st_.locals):
            emitted |= aut.emits(local)
        assert st_.outputs == emitted
    # deterministic, including ids
    again = compose(sys_)
    assert again.names == rg.names and again.arcs == rg.arcs

    at = to_rg_at(rg)
    for s in range(len(at.states)):
        loops = [a for a in at.out_arcs[s] if a.is_loop]
        assert at.out_arcs[s], "RG@ must be total"
        if at.terminal[s]:
            assert len(loops) == 1 and len(at.out_arcs[s]) == 1
        else:
            assert not loops


def test_every_arc_guard_is_enabled_in_its_source():
    sys_ = load_model("clientserver_v2")
    rg = compose(sys_)
    internal, external = signals_of(sys_)
    for arc in rg.arcs:
        fixed = {s: s in rg.outputs(arc.src) for s in internal}
        ok, witness = satisfiable_under(arc.guard, fixed, external)
        assert ok and eval_guard(arc.guard, witness)


# -- exports -----------------------------------------------------------------

def test_dot_single_state():
    rg = graph_from_edges(1, [])
    dot = export_dot(rg)
    assert dot.count("->") == 1
    assert 's0 -> s0 [label="1"]' in dot
    assert dot.count("[label=") == 2


def test_dot_node_count_matches_compose():
    rg = compose(load_model("clientserver_v1"))
    dot = export_dot(rg)
    nodes = [l for l in dot.splitlines() if l.strip().startswith("s") and "->" not in l]
    assert len(nodes) == len(rg.states)


def test_exports_are_byte_stable():
    a = compose(load_model("clientserver_v2"))
    b = compose(load_model("clientserver_v2"))
    assert export_dot(a) == export_dot(b)
    assert export_json(a) == export_json(b)
