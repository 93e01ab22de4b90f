import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasieq import DirectedGraph, DyadState, compute_degrees, dyad_state


def three_node():
    # {1->2, 2->1, 1->3} with nodes relabelled 0, 1, 2
    return DirectedGraph.from_edges([("1", "2"), ("2", "1"), ("1", "3")])


def test_degrees_small_example():
    d = compute_degrees(three_node())
    np.testing.assert_array_equal(d.k_out, [2, 1, 0])
    np.testing.assert_array_equal(d.k_in, [1, 1, 1])
    np.testing.assert_array_equal(d.k_both, [1, 1, 0])
    np.testing.assert_array_equal(d.k_right, [1, 0, 0])
    np.testing.assert_array_equal(d.k_left, [0, 0, 1])


def test_degrees_empty_graph():
    d = compute_degrees(DirectedGraph(np.zeros((4, 4), dtype=int)))
    for arr in (d.k_out, d.k_in, d.k_both, d.k_right, d.k_left):
        np.testing.assert_array_equal(arr, 0)


def test_degrees_complete_graph():
    d = compute_degrees(DirectedGraph(1 - np.eye(4, dtype=int)))
    for arr in (d.k_out, d.k_in, d.k_both):
        np.testing.assert_array_equal(arr, 3)
    np.testing.assert_array_equal(d.k_right, 0)
    np.testing.assert_array_equal(d.k_left, 0)


@pytest.mark.parametrize(
    "a_ij, a_ji, expected",
    [(1, 0, DyadState.OUT), (1, 1, DyadState.BOTH), (0, 0, DyadState.EMPTY), (0, 1, DyadState.IN)],
)
def test_dyad_state(a_ij, a_ji, expected):
    g = DirectedGraph(np.array([[0, a_ij], [a_ji, 0]]))
    assert dyad_state(g, 0, 1) is expected
    assert dyad_state(g, 1, 0) is expected.reversed()


def test_dyad_state_rejects_loop():
    with pytest.raises(ValueError):
        dyad_state(three_node(), 1, 1)


def test_from_edges_drops_loops_and_duplicates():
    g = DirectedGraph.from_edges([("a", "b"), ("a", "b"), ("b", "b"), ("c", "a")])
    assert g.node_labels == ("a", "b", "c")
    assert g.n_links == 2
    assert g.dropped_self_loops == 1
    assert g.duplicate_edges == 1
    assert g.labelled_edges() == [("a", "b"), ("c", "a")]


def test_from_edges_fixed_labels():
    g = DirectedGraph.from_edges([("b", "a")], labels=["a", "b", "z"])
    assert g.n == 3
    assert g.edges() == [(1, 0)]
    with pytest.raises(KeyError):
        DirectedGraph.from_edges([("q", "a")], labels=["a"])


@pytest.mark.parametrize(
    "bad",
    [np.zeros((2, 3)), np.array([[0, 2], [0, 0]]), np.array([[1, 0], [0, 0]])],
)
def test_invalid_adjacency(bad):
    with pytest.raises(ValueError):
        DirectedGraph(bad)


def test_graph_is_immutable():
    g = three_node()
    with pytest.raises(ValueError):
        g.adjacency[0, 2] = 1


adjacency = st.integers(2, 9).flatmap(
    lambda n: st.lists(st.integers(0, 1), min_size=n * n, max_size=n * n).map(
        lambda v: (np.array(v).reshape(n, n) * (1 - np.eye(n, dtype=int)))
    )
)


@settings(max_examples=60, deadline=None)
@given(adjacency)
def test_exactly_one_state_per_dyad(a):
    g = DirectedGraph(a)
    ind = g.state_indicators()
    off = 1 - np.eye(g.n)
    np.testing.assert_array_equal(ind.sum(axis=0), off)
    # ordered pair (j, i) sees the reversed state
    np.testing.assert_array_equal(ind[1], ind[2].T)


@settings(max_examples=60, deadline=None)
@given(adjacency)
def test_degrees_consistent_with_dyad_states(a):
    g = DirectedGraph(a)
    d = g.degrees()
    for i in range(g.n):
        states = [dyad_state(g, i, j) for j in range(g.n) if j != i]
        assert d.k_both[i] == states.count(DyadState.BOTH)
        assert d.k_right[i] == states.count(DyadState.OUT)
        assert d.k_left[i] == states.count(DyadState.IN)
    assert d.n_links == a.sum()
    assert d.k_out.sum() == d.k_in.sum()


def test_permuted_relabels_nodes():
    g = three_node()
    h = g.permuted([2, 0, 1])
    assert h.node_labels == ("3", "1", "2")
    assert set(h.labelled_edges()) == set(g.labelled_edges())
