import random

import pytest
from hypothesis import given, settings, strategies as st

from cbscheck.charsets import char_sets, future, identity_violations, past
from cbscheck.modelfile import load_model
from cbscheck.rg import compose, to_rg_at

from helpers import graph_from_edges, random_rg

CHAIN = graph_from_edges(3, [(0, 1), (1, 2)], names=["a", "b", "c"])
CYCLE = graph_from_edges(2, [(0, 1), (1, 0)], names=["a", "b"])


def test_chain_future_and_past():
    assert future(CHAIN, 1) == {2}
    assert past(CHAIN, 1) == {0}


def test_terminal_state_is_its_own_future():
    # c keeps its ear
    assert future(CHAIN, 2) == {2}


def test_cycle_past():
    assert past(CYCLE, 0) == {0, 1}


def test_chain_sets_at_middle():
    cs = char_sets(CHAIN, 1)
    assert cs.beg == {0} and cs.end_ == {2} and cs.cyc == frozenset()
    assert not cs.on_cycle


def test_cycle_sets():
    cs = char_sets(CYCLE, 0)
    assert cs.cyc == {0, 1}
    assert cs.beg == cs.end_ == frozenset()
    assert cs.on_cycle


def test_corrected_client_server_future_is_cyclic():
    rg = to_rg_at(compose(load_model("clientserver_v2")))
    cs = char_sets(rg, rg.state_id("req_idle"))
    assert cs.end_ == frozenset()
    assert cs.fut <= cs.pas


def test_unknown_state():
    with pytest.raises(KeyError):
        future(CHAIN, 7)


def _closure(rg):
    # Warshall over the arc list, nothing shared with BFS
    n = len(rg.states)
    r = [[False] * n for _ in range(n)]
    for a in rg.arcs:
        r[a.src][a.dst] = True
    for k in range(n):
        for i in range(n):
            if r[i][k]:
                row_k = r[k]
                row_i = r[i]
                for j in range(n):
                    if row_k[j]:
                        row_i[j] = True
    return r


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 25))
def test_future_matches_closure_and_past_matches_reversal(seed, n):
    rg = random_rg(random.Random(seed), n)
    r = _closure(rg)
    ids = range(len(rg.states))
    for s in ids:
        assert future(rg, s) == {t for t in ids if r[s][t]}
        # past on the graph is future on the reversed relation
        assert past(rg, s) == {t for t in ids if r[t][s]}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 40))
def test_identities_and_cycle_membership(seed, n):
    rg = random_rg(random.Random(seed), n)
    for s in range(len(rg.states)):
        cs = char_sets(rg, s)
        assert identity_violations(cs) == []
        assert (s in cs.fut) == (s in cs.pas) == (s in cs.cyc) == cs.on_cycle
        # on a path through s, every state is in exactly one block
        for u in cs.pas | {s} | cs.fut:
            blocks = [u in cs.beg, u in cs.cyc | {s}, u in cs.end_]
            assert sum(blocks) == 1


def test_global_cover_holds_on_comparable_graphs():
    for s in range(3):
        cs = char_sets(CHAIN, s)
        assert cs.pas | {s} | cs.fut == set(range(cs.gs))


def test_global_cover_can_fail_on_parallel_branches():
    # 0 -> 1, 0 -> 2: states 1 and 2 are incomparable
    rg = graph_from_edges(3, [(0, 1), (0, 2)])
    cs = char_sets(rg, 1)
    assert 2 not in cs.pas | {1} | cs.fut


def test_get_by_tag():
    cs = char_sets(CHAIN, 1)
    assert cs.get("BEG") == cs.beg and cs.get("END") == cs.end_
    with pytest.raises(KeyError):
        cs.get("XYZ")
