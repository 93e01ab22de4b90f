"""Binary directed graphs, degree vectors and dyad decomposition.

Every pair of distinct nodes ``{i, j}`` is in exactly one of four dyad
states. Seen from the ordered pair ``(i, j)`` these are::

    EMPTY  no link either way
    OUT    i -> j only
    IN     j -> i only
    BOTH   i <-> j

The integer codes below are used as the leading axis of every
``(4, n, n)`` state array in the package.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class DyadState(enum.IntEnum):
    EMPTY = 0
    OUT = 1
    IN = 2
    BOTH = 3

    def reversed(self) -> "DyadState":
        """State of the same dyad seen from the other endpoint."""
        return _REVERSED[self]


_REVERSED = {
    DyadState.EMPTY: DyadState.EMPTY,
    DyadState.OUT: DyadState.IN,
    DyadState.IN: DyadState.OUT,
    DyadState.BOTH: DyadState.BOTH,
}

# state code -> state code of the transposed pair
SWAP = np.array([0, 2, 1, 3])


@dataclass(frozen=True)
class DegreeVectors:
    k_out: np.ndarray
    k_in: np.ndarray
    k_right: np.ndarray  # non-reciprocated out-links
    k_left: np.ndarray  # non-reciprocated in-links
    k_both: np.ndarray  # reciprocated links

    @property
    def n_links(self) -> int:
        return int(self.k_out.sum())

    @property
    def n_reciprocated(self) -> int:
        """Number of reciprocated directed links (twice the mutual dyads)."""
        return int(self.k_both.sum())


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Immutable binary adjacency of one snapshot, without self-loops.

    Use :meth:`from_edges` to build a graph from labelled edge records;
    it drops self-loops and collapses duplicates, counting both.
    """

    adjacency: np.ndarray
    node_labels: tuple[str, ...] | None = None
    dropped_self_loops: int = 0
    duplicate_edges: int = 0
    _degrees: list = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("a graph needs at least one node")
        if not np.isin(a, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if np.any(np.diagonal(a)):
            raise ValueError("self-loops are not allowed (a_ii must be 0)")
        a = a.astype(np.int8, copy=True)
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)
        if self.node_labels is not None:
            labels = tuple(str(s) for s in self.node_labels)
            if len(labels) != a.shape[0]:
                raise ValueError("need one label per node")
            object.__setattr__(self, "node_labels", labels)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_links(self) -> int:
        return int(self.adjacency.sum())

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[str, str]],
        labels: Sequence[str] | None = None,
    ) -> "DirectedGraph":
        """Build a graph from ``(source, target)`` label pairs.

        Nodes are indexed in first-seen order unless ``labels`` fixes the
        node set and order in advance (edges naming unknown labels then
        raise ``KeyError``).
        """
        index: dict[str, int] = {}
        fixed = labels is not None
        if fixed:
            for lab in labels:
                index.setdefault(str(lab), len(index))
        pairs = []
        for src, dst in edges:
            src, dst = str(src), str(dst)
            for lab in (src, dst):
                if lab not in index:
                    if fixed:
                        raise KeyError(f"label {lab!r} not in the node set")
                    index[lab] = len(index)
            pairs.append((index[src], index[dst]))
        n = max(len(index), 1)
        a = np.zeros((n, n), dtype=np.int8)
        loops = dupes = 0
        for i, j in pairs:
            if i == j:
                loops += 1
            elif a[i, j]:
                dupes += 1
            else:
                a[i, j] = 1
        names = tuple(index) if index else ("0",)
        return cls(a, names, dropped_self_loops=loops, duplicate_edges=dupes)

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adjacency))]

    def labelled_edges(self) -> list[tuple[str, str]]:
        names = self.node_labels or tuple(str(i) for i in range(self.n))
        return [(names[i], names[j]) for i, j in self.edges()]

    def state_matrix(self) -> np.ndarray:
        """``n x n`` array of :class:`DyadState` codes (diagonal is EMPTY)."""
        a = self.adjacency.astype(np.int8)
        return (a + 2 * a.T).astype(np.int8)

    def state_indicators(self) -> np.ndarray:
        """``(4, n, n)`` float indicators of each dyad state, zero diagonal."""
        s = self.state_matrix()
        out = np.stack([(s == k) for k in range(4)]).astype(float)
        idx = np.arange(self.n)
        out[:, idx, idx] = 0.0
        return out

    def degrees(self) -> DegreeVectors:
        if not self._degrees:
            self._degrees.append(compute_degrees(self))
        return self._degrees[0]

    def permuted(self, perm: Sequence[int]) -> "DirectedGraph":
        """Graph with node ``perm[i]`` of ``self`` relabelled as node ``i``."""
        perm = np.asarray(perm)
        labels = None
        if self.node_labels is not None:
            labels = tuple(self.node_labels[p] for p in perm)
        return DirectedGraph(self.adjacency[np.ix_(perm, perm)], labels)


def compute_degrees(g: DirectedGraph) -> DegreeVectors:
    a = g.adjacency.astype(np.int64)
    mutual = a * a.T
    k_out = a.sum(axis=1)
    k_in = a.sum(axis=0)
    k_both = mutual.sum(axis=1)
    return DegreeVectors(
        k_out=k_out,
        k_in=k_in,
        k_right=k_out - k_both,
        k_left=k_in - k_both,
        k_both=k_both,
    )


def dyad_state(g: DirectedGraph, i: int, j: int) -> DyadState:
    if i == j:
        raise ValueError("a dyad needs two distinct nodes")
    a = g.adjacency
    return DyadState(int(a[i, j]) + 2 * int(a[j, i]))
