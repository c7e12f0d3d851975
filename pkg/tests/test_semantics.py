import pytest
from hypothesis import given, settings

from choreo.errors import CapExceeded
from choreo.services.semantics import (
    TICK,
    can_tick,
    format_label,
    is_private,
    maximal_traces,
    reachable_states,
    sorted_traces,
    step,
    strong_traces,
    weak_traces,
)
from choreo.services.syntax import Choice, Interaction, One, Operation, Par, Seq, Zero, interactions, par_all, parse
from tests.generators import choreographies

AB = Interaction("a", "b", Operation("o1"))
CD = Interaction("c", "d", Operation("o2"))


# ============================================================================
# TRANSITION RULES
# ============================================================================

def test_interaction_rule():
    assert step(AB) == {(AB, One())}


def test_end_rule():
    assert step(One()) == {(TICK, Zero())}
    assert step(Zero()) == frozenset()


def test_sequence_rule():
    assert step(Seq(AB, CD)) == {(AB, Seq(One(), CD))}


def test_sequence_end_rule():
    # left part can terminate: the right part moves on its own
    assert step(Seq(One(), CD)) == {(CD, One())}
    assert step(Seq(One(), One())) == {(TICK, Zero())}


def test_parallel_rules():
    assert step(Par(AB, CD)) == {(AB, Par(One(), CD)), (CD, Par(AB, One()))}


def test_parallel_end_rule():
    assert step(Par(One(), One())) == {(TICK, Par(Zero(), Zero()))}
    assert step(Par(One(), AB)) == {(AB, Par(One(), One()))}


def test_choice_rules():
    assert step(Choice(AB, CD)) == {(AB, One()), (CD, One())}
    assert step(Choice(One(), AB)) == {(TICK, Zero()), (AB, One())}


def test_can_tick():
    assert can_tick(One())
    assert not can_tick(AB)
    assert can_tick(Choice(AB, One()))
    assert not can_tick(Par(One(), AB))
    assert can_tick(Seq(One(), Par(One(), One())))


def test_reachable_states_are_finite_and_include_start():
    c = parse("(a->b:o1 | c->d:o2) ; a->c:o3")
    states = reachable_states(c)
    assert c in states
    assert One() in states
    assert Zero() in states
    assert all(target in states for state in states for _, target in step(state))


@settings(max_examples=80, deadline=None)
@given(choreographies(runtime=True, max_leaves=8))
def test_every_move_consumes_a_leaf_of_the_term(c):
    own = {leaf for _, leaf in interactions(c)}
    for state in reachable_states(c):
        leaves = [leaf for _, leaf in interactions(state)]
        for label, target in step(state):
            if label is TICK:
                assert interactions(target) == []
                assert step(target) == frozenset()
            else:
                assert label in leaves
                assert label in own
                assert len(interactions(target)) < len(leaves)


# ============================================================================
# TRACES
# ============================================================================

def test_intro_strong_traces(intro):
    assert strong_traces(intro) == {(AB, CD, TICK)}


def test_intro_connected_weak_traces(intro_connected):
    assert weak_traces(intro_connected) == {(AB, CD, TICK)}
    assert len(next(iter(strong_traces(intro_connected)))) == 5


def test_parallel_interleavings():
    assert strong_traces(Par(AB, CD)) == {(AB, CD, TICK), (CD, AB, TICK)}


def test_one_and_zero_traces_differ():
    assert strong_traces(One()) == {(TICK,)}
    assert strong_traces(Zero()) == {()}


def test_deadlocked_residue_ends_trace():
    assert strong_traces(Seq(AB, Par(One(), Zero()))) == {(AB,)}


@settings(max_examples=60, deadline=None)
@given(choreographies(runtime=True, max_leaves=8))
def test_tick_only_ends_a_trace(c):
    for trace in strong_traces(c):
        assert TICK not in trace[:-1]


@settings(max_examples=60, deadline=None)
@given(choreographies(max_leaves=8))
def test_user_terms_always_terminate(c):
    assert all(trace and trace[-1] is TICK for trace in strong_traces(c))


def test_private_only_choreography_is_weakly_silent():
    c = parse("a->b:o*")
    assert weak_traces(c) == {(TICK,)}
    assert is_private(c)
    assert not is_private(TICK)


def test_cap_exceeded():
    leaves = [Interaction("a", "b", Operation(f"o{i}")) for i in range(5)]
    c = par_all(*leaves)
    assert len(strong_traces(c, cap=120)) == 120
    with pytest.raises(CapExceeded) as info:
        strong_traces(c, cap=100)
    assert info.value.cap == 100


def test_maximal_traces_on_explicit_graph():
    graph = {"s": [("x", "t"), ("y", "u")], "t": [("h", "u")], "u": []}
    traces = maximal_traces("s", lambda state: graph[state])
    assert traces == {("x", "h"), ("y",)}
    hidden = maximal_traces("s", lambda state: graph[state], hidden=lambda label: label == "h")
    assert hidden == {("x",), ("y",)}


def test_sorted_traces_render_labels():
    assert sorted_traces(strong_traces(Par(AB, CD))) == [
        ["a->b:o1", "c->d:o2", "TICK"],
        ["c->d:o2", "a->b:o1", "TICK"],
    ]
    assert format_label(TICK) == "TICK"
