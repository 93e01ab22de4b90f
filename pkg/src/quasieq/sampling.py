"""Independent oracles for the analytical motif statistics.

``sample_graph`` / ``sample_batch`` draw graphs from a fitted ensemble one
dyad at a time; ``enumerate_exact`` weighs every graph on ``n <= 5`` nodes by
its model probability.

Random streams are keyed by ``(seed, sample id)`` through
:class:`numpy.random.SeedSequence` and a counter-based Philox generator, and
the uniform variate of dyad ``(i, j)`` (``i < j``) is always the
``index(i, j)``-th draw of its stream. A sample therefore does not depend on
how many other samples are drawn or in which order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import FittedEnsemble, ModelKind
from .graph import DirectedGraph
from .motifs import ALL_MOTIFS, build_catalog

MAX_EXACT_NODES = 5


def _stream(seed: int, sample_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(sample_id)])))


def _dyad_cdf(e: FittedEnsemble):
    P = e.state_probabilities()
    iu, ju = np.triu_indices(e.n, k=1)
    probs = P[:, iu, ju]  # (4, D) in state order EMPTY, OUT, IN, BOTH
    cdf = np.cumsum(probs, axis=0)[:3]
    return iu, ju, cdf


def _draw_states(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    # state = number of cumulative thresholds not exceeding u
    return (u[..., None, :] >= cdf).sum(axis=-2).astype(np.int8)


def sample_graph(e: FittedEnsemble, seed: int = 0, sample_id: int = 0) -> DirectedGraph:
    """Draw one graph; every dyad takes one of its four states independently."""
    iu, ju, cdf = _dyad_cdf(e)
    u = _stream(seed, sample_id).random(len(iu))
    states = _draw_states(cdf, u)
    return DirectedGraph(_adjacency_from_states(e.n, iu, ju, states))


def _adjacency_from_states(n, iu, ju, states) -> np.ndarray:
    states = np.asarray(states)
    batch = states.shape[:-1]
    a = np.zeros(batch + (n, n), dtype=np.int8)
    a[..., iu, ju] = states & 1
    a[..., ju, iu] = (states >> 1) & 1
    return a


@dataclass(frozen=True)
class SampleBatch:
    kind: ModelKind
    n: int
    seed: int
    counts: np.ndarray  # (S, 16) motif abundances in ALL_MOTIFS order
    links: np.ndarray  # (S,) number of links per sample

    @property
    def size(self) -> int:
        return self.counts.shape[0]

    def mean(self) -> np.ndarray:
        return self.counts.mean(axis=0)

    def std(self) -> np.ndarray:
        return self.counts.std(axis=0, ddof=1)

    def standard_error(self) -> np.ndarray:
        return self.std() / np.sqrt(self.size)


def _batch_counts(adj: np.ndarray) -> np.ndarray:
    """Motif abundances (ALL_MOTIFS order) of a stack of adjacency matrices."""
    a = adj.astype(float)
    n = a.shape[-1]
    at = np.swapaxes(a, -1, -2)
    off = 1.0 - np.eye(n)
    E = [
        (1 - a) * (1 - at) * off,
        a * (1 - at),
        (1 - a) * at,
        a * at,
    ]
    single = E[1].sum(axis=(-1, -2))
    mutual = E[3].sum(axis=(-1, -2))
    empty = E[0].sum(axis=(-1, -2))
    out = [single, mutual, empty]
    for c in build_catalog().motifs:
        s01, s02, s12 = c.states
        out.append(np.sum(E[s02] * (E[s01] @ E[s12]), axis=(-1, -2)))
    return np.rint(np.stack(out, axis=-1)).astype(np.int64)


def sample_batch(e: FittedEnsemble, size: int, seed: int = 0, chunk: int = 2000) -> SampleBatch:
    """Draw ``size`` graphs and record every motif abundance."""
    if size < 1:
        raise ValueError("need at least one sample")
    iu, ju, cdf = _dyad_cdf(e)
    counts = np.empty((size, len(ALL_MOTIFS)), dtype=np.int64)
    links = np.empty(size, dtype=np.int64)
    for start in range(0, size, chunk):
        stop = min(size, start + chunk)
        u = np.stack([_stream(seed, s).random(len(iu)) for s in range(start, stop)])
        adj = _adjacency_from_states(e.n, iu, ju, _draw_states(cdf, u))
        counts[start:stop] = _batch_counts(adj)
        links[start:stop] = adj.sum(axis=(-1, -2))
    return SampleBatch(kind=e.kind, n=e.n, seed=int(seed), counts=counts, links=links)


@dataclass(frozen=True)
class ExactMoments:
    """Exact ensemble moments by enumeration (ordered counting convention)."""

    mean: np.ndarray  # ALL_MOTIFS order
    var: np.ndarray
    census_mean: np.ndarray  # 16 triad classes, census order
    census_var: np.ndarray
    total_probability: float
    n_graphs: int


def enumerate_exact(e: FittedEnsemble) -> ExactMoments:
    """Mean and variance of every motif over all ``2**(n(n-1))`` graphs."""
    n = e.n
    if n > MAX_EXACT_NODES:
        raise ValueError(f"exact enumeration is limited to n <= {MAX_EXACT_NODES}, got {n}")
    if n < 2:
        raise ValueError("need at least two nodes")
    P = e.state_probabilities()
    iu, ju = np.triu_indices(n, k=1)
    n_dyads = len(iu)
    n_graphs = 4 ** n_dyads
    codes = np.arange(n_graphs, dtype=np.int64)
    states = np.stack([(codes >> (2 * d)) & 3 for d in range(n_dyads)], axis=1).astype(np.int8)

    weights = np.ones(n_graphs)
    for d in range(n_dyads):
        weights *= P[states[:, d], iu[d], ju[d]]

    dyad_index = {(int(i), int(j)): d for d, (i, j) in enumerate(zip(iu, ju))}
    cat = build_catalog()
    auts = np.array([c.automorphisms for c in cat.classes], dtype=float)
    census = np.zeros((n_graphs, 16))
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                cls = cat.lookup[
                    states[:, dyad_index[a, b]],
                    states[:, dyad_index[a, c]],
                    states[:, dyad_index[b, c]],
                ]
                census[np.arange(n_graphs), cls] += 1.0
    ordered = census * auts

    single = ((states == 1) | (states == 2)).sum(axis=1)
    mutual = 2 * (states == 3).sum(axis=1)
    empty = 2 * (states == 0).sum(axis=1)
    values = np.column_stack([single, mutual, empty, ordered[:, 3:]]).astype(float)

    def moments(x):
        mu = weights @ x
        return mu, weights @ (x - mu) ** 2

    mean, var = moments(values)
    cmean, cvar = moments(ordered)
    return ExactMoments(
        mean=mean,
        var=var,
        census_mean=cmean,
        census_var=cvar,
        total_probability=float(weights.sum()),
        n_graphs=n_graphs,
    )
