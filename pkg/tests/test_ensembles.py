import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasieq import DirectedGraph, fit, fit_dcm, fit_drg, fit_rcm, log_likelihood
from quasieq.ensembles import (
    ConvergenceError,
    DegenerateGraphError,
    ModelKind,
    NearSaturationWarning,
    ensemble_from_parameters,
)
from synthetic import random_graph

ring5 = DirectedGraph.from_edges(
    [(str(i), str((i + 1) % 5)) for i in range(5)] + [(str((i + 1) % 5), str(i)) for i in range(5)]
)
cycle3 = DirectedGraph.from_edges([("1", "2"), ("2", "3"), ("3", "1")])
small = DirectedGraph.from_edges([("1", "2"), ("2", "1"), ("1", "3")])


def graph_with_links(n, links):
    a = np.zeros((n, n), dtype=int)
    iu = [(i, j) for i in range(n) for j in range(n) if i != j][:links]
    for i, j in iu:
        a[i, j] = 1
    return DirectedGraph(a)


# --- DRG ---------------------------------------------------------------


@pytest.mark.parametrize("n, links, p", [(10, 45, 0.5), (3, 3, 0.5)])
def test_drg_closed_form(n, links, p):
    e = fit_drg(graph_with_links(n, links))
    assert e.p == p
    assert not e.degenerate


def test_drg_empty_is_degenerate():
    e = fit_drg(graph_with_links(5, 0))
    assert e.p == 0.0
    assert e.degenerate


def test_drg_loglikelihood():
    e = ensemble_from_parameters("drg", 3, p=0.5)
    assert math.isclose(log_likelihood(e, small), 6 * math.log(0.5), rel_tol=1e-14)


# --- DCM ---------------------------------------------------------------


def test_dcm_three_cycle_is_symmetric():
    e = fit_dcm(cycle3)
    P = e.link_probabilities()
    off = ~np.eye(3, dtype=bool)
    np.testing.assert_allclose(P[off], 0.5, atol=1e-9)
    np.testing.assert_allclose(np.outer(e.x, e.y)[off], 1.0, rtol=1e-8)


@pytest.mark.parametrize("fitter", [fit_dcm, fit_rcm])
def test_empty_graph_all_parameters_zero(fitter):
    e = fitter(DirectedGraph(np.zeros((4, 4), dtype=int)))
    for v in (e.x, e.y, e.z):
        if v is not None:
            assert np.all(v == 0.0)
    assert np.all(e.state_probabilities()[1:] == 0.0)
    assert log_likelihood(e, DirectedGraph(np.zeros((4, 4), dtype=int))) == 0.0


def test_dcm_random_graph_reproduces_degrees():
    g = random_graph(50, 0.1, np.random.default_rng(7))
    e = fit_dcm(g)
    assert e.converged and e.residual <= 1e-6
    exp = e.expected_constraints()
    d = g.degrees()
    np.testing.assert_allclose(exp["k_out"], d.k_out, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(exp["k_in"], d.k_in, rtol=1e-6, atol=1e-8)


def test_dcm_perturbation_never_increases_likelihood():
    g = random_graph(20, 0.2, np.random.default_rng(3))
    e = fit_dcm(g)
    base = log_likelihood(e, g)
    delta = 1e-4
    for i in range(g.n):
        for sign in (1.0, -1.0):
            x = e.x.copy()
            x[i] = max(0.0, x[i] + sign * delta)
            other = ensemble_from_parameters("dcm", g.n, x, e.y)
            assert log_likelihood(other, g) <= base + 1e-12


@pytest.mark.parametrize("kind", ["dcm", "rcm"])
def test_likelihood_is_stationary(kind):
    g = random_graph(25, 0.15, np.random.default_rng(11))
    e = fit(g, kind)
    names = ["x", "y"] + (["z"] if kind == "rcm" else [])
    h = 1e-6
    for name in names:
        vec = getattr(e, name)
        for i in np.nonzero(vec)[0]:
            grads = []
            for sign in (1.0, -1.0):
                params = {k: getattr(e, k).copy() for k in names}
                params[name][i] = vec[i] * math.exp(sign * h)
                grads.append(log_likelihood(ensemble_from_parameters(kind, g.n, **params), g))
            # derivative with respect to log(parameter) = parameter * d/dparameter
            assert abs(grads[0] - grads[1]) / (2 * h) <= 1e-4


# --- RCM ---------------------------------------------------------------


def test_rcm_reciprocated_ring():
    e = fit_rcm(ring5)
    assert np.all(e.x == 0.0) and np.all(e.y == 0.0)
    np.testing.assert_allclose(e.z, 1.0, rtol=1e-8)
    P = e.state_probabilities()
    off = ~np.eye(5, dtype=bool)
    np.testing.assert_allclose(P[3][off], 0.5, atol=1e-9)


def test_rcm_saturated_small_graph():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearSaturationWarning)
        e = fit_rcm(small)
    exp = e.expected_constraints()
    np.testing.assert_allclose(exp["k_right"], [1, 0, 0], atol=1e-7)
    np.testing.assert_allclose(exp["k_left"], [0, 0, 1], atol=1e-7)
    np.testing.assert_allclose(exp["k_both"], [1, 1, 0], atol=1e-7)


def test_rcm_without_reciprocity_has_no_mutual_dyads():
    g = DirectedGraph(np.triu((np.random.default_rng(2).random((12, 12)) < 0.4).astype(int), 1))
    e = fit_rcm(g)
    assert np.all(e.z == 0.0)
    assert np.all(e.state_probabilities()[3] == 0.0)


def test_near_saturation_warning():
    a = (np.random.default_rng(5).random((8, 8)) < 0.3).astype(int)
    a[0, :] = 1
    np.fill_diagonal(a, 0)
    with pytest.warns(NearSaturationWarning):
        e = fit_dcm(DirectedGraph(a))
    assert e.converged


def test_complete_graph_is_rejected():
    with pytest.raises(DegenerateGraphError):
        fit_dcm(DirectedGraph(1 - np.eye(4, dtype=int)))


def test_non_convergence_carries_best_iterate():
    g = random_graph(30, 0.2, np.random.default_rng(1))
    with pytest.raises(ConvergenceError) as info:
        fit_rcm(g, tol=1e-8, max_iter=2)
    best = info.value.ensemble
    assert not best.converged and best.residual > 1e-8
    e = fit(g, "rcm", max_iter=2, allow_unconverged=True)
    assert not e.converged
    assert e.residual == best.residual


# --- dyad probabilities --------------------------------------------------


def test_dyad_probability_examples():
    drg = ensemble_from_parameters("drg", 3, p=0.5)
    assert drg.dyad_probabilities(0, 1).as_tuple() == (0.25, 0.25, 0.25, 0.25)
    rcm = ensemble_from_parameters("rcm", 2, [0, 0], [0, 0], [1, 1])
    assert rcm.dyad_probabilities(0, 1).as_tuple() == (0.0, 0.0, 0.5, 0.5)
    dcm = ensemble_from_parameters("dcm", 2, [1, 1], [1, 1])
    dp = dcm.dyad_probabilities(0, 1)
    assert dp.p_out == pytest.approx(0.25, abs=1e-15)
    assert dp.p_both == pytest.approx(0.25, abs=1e-15)


params = st.integers(2, 7).flatmap(
    lambda n: st.tuples(
        st.just(n),
        *[st.lists(st.floats(0, 20), min_size=n, max_size=n) for _ in range(3)],
        st.floats(0, 1),
    )
)


@settings(max_examples=80, deadline=None)
@given(params, st.sampled_from(list(ModelKind)))
def test_dyad_probabilities_are_distributions(args, kind):
    n, x, y, z, p = args
    e = ensemble_from_parameters(kind, n, x, y, z, p)
    P = e.state_probabilities()
    off = ~np.eye(n, dtype=bool)
    assert np.all((P >= 0) & (P <= 1))
    np.testing.assert_allclose(P.sum(axis=0)[off], 1.0, atol=1e-12)
    np.testing.assert_array_equal(P[1], P[2].T)
    np.testing.assert_array_equal(P[0], P[0].T)
    np.testing.assert_array_equal(P[3], P[3].T)


@pytest.mark.parametrize("kind", ["dcm", "rcm"])
def test_exchangeability(kind):
    rng = np.random.default_rng(21)
    g = random_graph(15, 0.25, rng)
    perm = rng.permutation(g.n)
    e, ep = fit(g, kind), fit(g.permuted(perm), kind)
    # the likelihood is gauge invariant (x -> c x, y -> y / c), so compare probabilities
    np.testing.assert_allclose(
        ep.state_probabilities(), e.state_probabilities()[:, perm][:, :, perm], atol=1e-7
    )


@pytest.mark.parametrize("kind", ["dcm", "rcm"])
def test_zero_constraints_pin_parameters(kind):
    a = (np.random.default_rng(4).random((12, 12)) < 0.3).astype(int)
    a[:, 3] = 0  # node 3 has no in-links, node 5 no out-links
    a[5, :] = 0
    np.fill_diagonal(a, 0)
    g = DirectedGraph(a)
    e = fit(g, kind)
    d = g.degrees()
    if kind == "dcm":
        assert np.all(e.x[d.k_out == 0] == 0.0) and np.all(e.y[d.k_in == 0] == 0.0)
    else:
        assert np.all(e.x[d.k_right == 0] == 0.0)
        assert np.all(e.y[d.k_left == 0] == 0.0)
        assert np.all(e.z[d.k_both == 0] == 0.0)
    for v in (e.x, e.y):
        assert np.all(np.isfinite(v)) and np.all(v >= 0)
