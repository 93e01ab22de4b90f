"""Dyadic and triadic motifs: catalog, counts, expectations, variances, z-scores.

Counting convention
-------------------
Motif abundances are sums over *ordered* node tuples of an indicator
product, e.g. ``N_recip = sum_{i != j} a_ij a_ji``. For a triadic motif this
is the number of unordered occurrences times the automorphism count of the
pattern. :func:`full_triad_census` exposes unordered counts instead. z-scores
do not depend on the convention.

Triads are encoded by the dyad states of the ordered pairs ``(0, 1)``,
``(0, 2)`` and ``(1, 2)`` of the three nodes, so there are ``4**3 = 64``
labelled triads. The 13 connected classes are numbered by increasing
adjacency id (the 3x3 adjacency matrix read row-major as a 9-bit number,
minimised over relabelings), the numbering used in the significance
profile literature: motif 9 is the 3-cycle and motifs 9, 10, 12, 13 are the
directed 3-loops with 0, 1, 2 and 3 reciprocated dyads.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ensembles import FittedEnsemble, ModelKind
from .graph import DirectedGraph, DyadState

N_TRIADIC = 13
PERMUTATIONS = tuple(itertools.permutations(range(3)))
_PAIRS = ((0, 1), (0, 2), (1, 2))

MAN_LABELS = {
    0: "003", 2: "012", 10: "102",
    6: "021D", 12: "021C", 14: "111U", 36: "021U", 38: "030T", 46: "120U",
    74: "111D", 78: "201", 98: "030C", 102: "120C", 108: "120D", 110: "210", 238: "300",
}


class MotifClass(str, enum.Enum):
    DYADIC = "dyadic"
    TRIADIC = "triadic"


_DYAD_NAMES = {1: "single", 2: "reciprocated", 3: "empty"}


@dataclass(frozen=True, order=True)
class MotifId:
    kind: MotifClass
    index: int

    def __post_init__(self):
        top = 3 if self.kind is MotifClass.DYADIC else N_TRIADIC
        if not 1 <= self.index <= top:
            raise ValueError(f"{self.kind.value} motif index must be in 1..{top}")

    @property
    def label(self) -> str:
        if self.kind is MotifClass.DYADIC:
            return _DYAD_NAMES[self.index]
        return f"m{self.index}"

    @classmethod
    def parse(cls, text: str) -> "MotifId":
        t = str(text).strip().lower()
        for idx, name in _DYAD_NAMES.items():
            if t == name:
                return cls(MotifClass.DYADIC, idx)
        if t.startswith("m"):
            t = t[1:]
        return cls(MotifClass.TRIADIC, int(t))

    def __str__(self):
        return self.label


def dyadic(index: int) -> MotifId:
    return MotifId(MotifClass.DYADIC, index)


def triadic(index: int) -> MotifId:
    return MotifId(MotifClass.TRIADIC, index)


SINGLE, RECIPROCATED, EMPTY = dyadic(1), dyadic(2), dyadic(3)
ALL_MOTIFS = tuple([dyadic(i) for i in (1, 2, 3)] + [triadic(i) for i in range(1, N_TRIADIC + 1)])
TRIADIC_MOTIFS = ALL_MOTIFS[3:]


# ---------------------------------------------------------------------------
# catalog


def _states_to_adj(states) -> np.ndarray:
    a = np.zeros((3, 3), dtype=np.int8)
    for (u, v), s in zip(_PAIRS, states):
        a[u, v] = s & 1
        a[v, u] = (s >> 1) & 1
    return a


def _adj_to_states(a) -> tuple[int, int, int]:
    return tuple(int(a[u, v]) + 2 * int(a[v, u]) for u, v in _PAIRS)


def _adj_id(a) -> int:
    bits = a.reshape(-1)
    return int(sum(int(b) << (8 - k) for k, b in enumerate(bits)))


def _relabel(a, perm) -> np.ndarray:
    # node perm[i] becomes node i
    p = list(perm)
    return a[np.ix_(p, p)]


@dataclass(frozen=True)
class TriadClass:
    """One isomorphism class of 3-node digraphs."""

    census_index: int  # 0..15; 0-2 are the disconnected classes
    motif: MotifId | None  # None for disconnected classes
    adjacency_id: int
    name: str
    representative: np.ndarray  # 3x3 adjacency with the smallest id
    states: tuple[int, int, int]  # dyad states of (0,1), (0,2), (1,2)
    automorphisms: int
    members: tuple[int, ...]  # labelled codes s01 + 4 s02 + 16 s12

    def describe(self) -> str:
        return " ".join(
            f"{u}{v}:{DyadState(s).name}" for (u, v), s in zip(_PAIRS, self.states)
        )


@dataclass(frozen=True)
class MotifCatalog:
    classes: tuple[TriadClass, ...]  # census order
    lookup: np.ndarray  # (4, 4, 4) -> census index

    def triad(self, m: MotifId) -> TriadClass:
        if m.kind is not MotifClass.TRIADIC:
            raise ValueError("not a triadic motif")
        return self.classes[m.index + 2]

    @property
    def motifs(self) -> tuple[TriadClass, ...]:
        return self.classes[3:]

    def automorphisms(self, m: MotifId) -> int:
        return self.triad(m).automorphisms


def code_of(states) -> int:
    s01, s02, s12 = states
    return int(s01) + 4 * int(s02) + 16 * int(s12)


@lru_cache(maxsize=None)
def build_catalog() -> MotifCatalog:
    """Enumerate the 64 labelled triads and group them into 16 classes."""
    orbits: dict[int, list] = {}
    for states in itertools.product(range(4), repeat=3):
        a = _states_to_adj(states)
        images = [_relabel(a, p) for p in PERMUTATIONS]
        key = min(_adj_id(b) for b in images)
        orbits.setdefault(key, []).append(states)

    disconnected = []
    connected = []
    for key, members in orbits.items():
        nonempty = sum(1 for s in members[0] if s)
        (connected if nonempty >= 2 else disconnected).append(key)
    if len(connected) != N_TRIADIC or len(orbits) != 16:
        raise RuntimeError(
            f"triad enumeration found {len(connected)} connected classes "
            f"and {len(orbits)} classes in total"
        )
    # ids 0, 2, 10: empty, single edge, mutual edge
    disconnected.sort()

    classes = []
    lookup = np.full((4, 4, 4), -1, dtype=np.int64)
    for idx, key in enumerate(disconnected + sorted(connected)):
        members = orbits[key]
        rep_states = next(s for s in members if _adj_id(_states_to_adj(s)) == key)
        rep = _states_to_adj(rep_states)
        auts = sum(1 for p in PERMUTATIONS if np.array_equal(_relabel(rep, p), rep))
        if auts * len(members) != 6:
            raise RuntimeError("orbit-stabiliser check failed")
        for s in members:
            lookup[s] = idx
        rep.setflags(write=False)
        classes.append(
            TriadClass(
                census_index=idx,
                motif=triadic(idx - 2) if idx >= 3 else None,
                adjacency_id=key,
                name=MAN_LABELS[key],
                representative=rep,
                states=rep_states,
                automorphisms=auts,
                members=tuple(sorted(code_of(s) for s in members)),
            )
        )
    lookup.setflags(write=False)
    return MotifCatalog(classes=tuple(classes), lookup=lookup)


def triad_class_of(states) -> int:
    """Census index of the labelled triad with dyad states ``states``."""
    return int(build_catalog().lookup[tuple(states)])


# ---------------------------------------------------------------------------
# counting


def _pattern_sum(M: np.ndarray, states) -> float:
    """``sum_{i,j,k} M[s01][i,j] M[s02][i,k] M[s12][j,k]`` for 4-layer ``M``.

    ``M`` must have zero diagonals so that the sum runs over distinct nodes.
    """
    s01, s02, s12 = states
    return float(np.sum(M[s02] * (M[s01] @ M[s12])))


def observed_triad_ordered(g: DirectedGraph) -> np.ndarray:
    """Ordered-convention counts of all 16 triad classes (census order)."""
    E = g.state_indicators()
    cat = build_catalog()
    return np.array([round(_pattern_sum(E, c.states)) for c in cat.classes], dtype=np.int64)


def full_triad_census(g: DirectedGraph) -> np.ndarray:
    """Unordered counts of the 16 triad classes; they sum to ``C(n, 3)``.

    Index 0-2 hold the empty, single-edge and mutual-edge classes and index
    ``m + 2`` holds triadic motif ``m``.
    """
    cat = build_catalog()
    ordered = observed_triad_ordered(g)
    auts = np.array([c.automorphisms for c in cat.classes])
    return ordered // auts


def census_labels() -> list[str]:
    return [c.name if c.motif is None else c.motif.label for c in build_catalog().classes]


def observed_dyadic(g: DirectedGraph) -> np.ndarray:
    a = g.adjacency.astype(np.int64)
    n = g.n
    mutual = int((a * a.T).sum())
    single = int(a.sum()) - mutual
    # a single dyad is OUT from one end and IN from the other, so ordered
    # pairs split as single (OUT) + single (IN) + mutual + empty
    empty = n * (n - 1) - 2 * single - mutual
    return np.array([single, mutual, empty], dtype=np.int64)


def observed_counts(g: DirectedGraph) -> np.ndarray:
    """Observed abundances of :data:`ALL_MOTIFS` (ordered convention)."""
    return np.concatenate([observed_dyadic(g), observed_triad_ordered(g)[3:]])


def count_motif(g: DirectedGraph, m: MotifId) -> int:
    if m.kind is MotifClass.DYADIC:
        return int(observed_dyadic(g)[m.index - 1])
    E = g.state_indicators()
    return round(_pattern_sum(E, build_catalog().triad(m).states))


# ---------------------------------------------------------------------------
# expectations


def _drg_state_weights(p: float) -> np.ndarray:
    return np.array([(1 - p) ** 2, p * (1 - p), p * (1 - p), p * p])


def expected_triad_ordered(e: FittedEnsemble, fast_path: bool = True) -> np.ndarray:
    """Expected ordered-convention counts of the 16 triad classes."""
    cat = build_catalog()
    if fast_path and e.kind is ModelKind.DRG:
        n = e.n
        q = _drg_state_weights(e.p)
        tuples = n * (n - 1) * (n - 2)
        return np.array([tuples * np.prod(q[list(c.states)]) for c in cat.classes])
    P = e.state_probabilities()
    return np.array([_pattern_sum(P, c.states) for c in cat.classes])


def expected_dyadic(e: FittedEnsemble, fast_path: bool = True) -> np.ndarray:
    if fast_path and e.kind is ModelKind.DRG:
        q = _drg_state_weights(e.p)
        pairs = e.n * (e.n - 1)
        return pairs * np.array([q[1], q[3], q[0]])
    P = e.state_probabilities()
    return np.array([P[1].sum(), P[3].sum(), P[0].sum()])


def expected_counts(e: FittedEnsemble, fast_path: bool = True) -> np.ndarray:
    """Expected abundances of :data:`ALL_MOTIFS` under ``e``."""
    return np.concatenate([expected_dyadic(e, fast_path), expected_triad_ordered(e, fast_path)[3:]])


def expected_motif(e: FittedEnsemble, m: MotifId, fast_path: bool = True) -> float:
    if m.kind is MotifClass.DYADIC:
        return float(expected_dyadic(e, fast_path)[m.index - 1])
    return float(expected_triad_ordered(e, fast_path)[m.index + 2])


# ---------------------------------------------------------------------------
# variances
#
# N_m = sum_T g_T over unordered triples, g_T = aut * [T in class m]. Two
# distinct triples share at most one dyad and are independent given it, so
#
#   Var N = sum_T Var g_T + sum_{dyads d} sum_{k != k'} Cov(g_{d,k}, g_{d,k'})
#
# With h_s(i,j,k) = E[g_{ijk} | state(i,j) = s], H_s = sum_k h_s and
# Q_s = sum_k h_s**2 this collapses to matrix products over (n, n) arrays.

_UNORDERED = [(t, u) for t in range(4) for u in range(t, 4)]
_FOLD = np.zeros((4, 4, len(_UNORDERED)))
for _k, (_t, _u) in enumerate(_UNORDERED):
    _FOLD[_t, _u, _k] = 1.0
    _FOLD[_u, _t, _k] = 1.0


class _VarianceKernel:
    """Motif-independent products of the state probabilities of one model."""

    def __init__(self, P: np.ndarray):
        self.P = P
        n = P.shape[1]
        pp = np.stack([P[t] * P[u] for t, u in _UNORDERED])
        # R[k, l, i, j] = sum_m pp[k][i, m] * pp[l][j, m]
        self.R = np.einsum("kim,ljm->klij", pp, pp, optimize=True)
        # G[t, u, i, j] = sum_k P[t][i, k] * P[u][j, k]
        self.G = np.einsum("tik,ujk->tuij", P, P, optimize=True)
        # S[a, k, l] = sum_ij pp[a] * R[k, l]
        self.S = np.einsum("aij,klij->akl", pp, self.R, optimize=True)
        self.n = n

    def variance(self, coef: np.ndarray, auts: int) -> tuple[float, float]:
        """Mean and variance of the triad class with ``coef[s, t, u]``."""
        P = self.P
        H = np.einsum("stu,tuij->sij", coef, self.G, optimize=True)
        mean_h = np.sum(P * H, axis=0)
        expected = float(mean_h.sum()) / 6.0
        c2 = np.einsum("stu,sTU,tTk,uUl->skl", coef, coef, _FOLD, _FOLD, optimize=True)
        Q = np.einsum("skl,klij->sij", c2, self.R, optimize=True)
        c6 = np.einsum(
            "stu,STU,sSa,tTk,uUl->akl", coef, coef, _FOLD, _FOLD, _FOLD, optimize=True
        )
        A = float(np.sum(c6 * self.S))
        spread = np.sum(P * (H - mean_h) ** 2, axis=0) - np.sum(P * Q, axis=0)
        var = auts * expected + A / 3.0 + 0.5 * float(spread.sum())
        return expected, var


def _class_coefficients(idx: int, auts: int) -> np.ndarray:
    return auts * (build_catalog().lookup == idx).astype(float)


def triad_moments(e: FittedEnsemble) -> tuple[np.ndarray, np.ndarray]:
    """Exact means and variances of all 16 triad classes (ordered convention)."""
    kernel = _VarianceKernel(e.state_probabilities())
    means = np.empty(16)
    variances = np.empty(16)
    for c in build_catalog().classes:
        coef = _class_coefficients(c.census_index, c.automorphisms)
        means[c.census_index], variances[c.census_index] = kernel.variance(coef, c.automorphisms)
    return means, np.maximum(variances, 0.0)


def dyadic_variances(e: FittedEnsemble) -> np.ndarray:
    P = e.state_probabilities()
    iu = np.triu_indices(e.n, k=1)
    single = (P[1] + P[2])[iu]
    both = P[3][iu]
    empty = P[0][iu]
    return np.array([
        np.sum(single * (1 - single)),
        4.0 * np.sum(both * (1 - both)),
        4.0 * np.sum(empty * (1 - empty)),
    ])


def motif_variances(e: FittedEnsemble) -> np.ndarray:
    """Variances of :data:`ALL_MOTIFS` under ``e``."""
    _, tri = triad_moments(e)
    return np.concatenate([dyadic_variances(e), tri[3:]])


def motif_variance(e: FittedEnsemble, m: MotifId) -> float:
    if m.kind is MotifClass.DYADIC:
        return float(dyadic_variances(e)[m.index - 1])
    c = build_catalog().triad(m)
    kernel = _VarianceKernel(e.state_probabilities())
    _, var = kernel.variance(_class_coefficients(c.census_index, c.automorphisms), c.automorphisms)
    return max(var, 0.0)


# ---------------------------------------------------------------------------
# z-scores and significance profiles

# relative size below which a variance is treated as zero (deterministic count)
_VAR_FLOOR = 1e-12


@dataclass(frozen=True)
class MotifStats:
    motif: MotifId
    observed: int
    expected: float
    std_dev: float
    z: float  # nan when undefined
    sp: float  # nan for dyadic motifs and undefined z

    @property
    def z_defined(self) -> bool:
        return bool(np.isfinite(self.z))


def _z(observed, expected, std) -> float:
    if not std > 0:
        return float("nan")
    return float((observed - expected) / std)


def z_score(g: DirectedGraph, e: FittedEnsemble, m: MotifId) -> float:
    """``(observed - expected) / std``; ``nan`` when the std is zero."""
    obs = count_motif(g, m)
    mean = expected_motif(e, m)
    std = _std(motif_variance(e, m), mean)
    return _z(obs, mean, std)


def _std(var, mean) -> float:
    scale = max(abs(mean), 1.0)
    if var <= _VAR_FLOOR * scale * scale:
        return 0.0
    return float(np.sqrt(var))


def significance_profile(z) -> tuple[np.ndarray, bool]:
    """Unit-normalise a z-vector; undefined (nan) entries count as zero.

    Returns the profile and a flag that is ``True`` when the norm is zero,
    in which case the profile is all zeros.
    """
    z = np.nan_to_num(np.asarray(z, dtype=float), nan=0.0, posinf=0.0, neginf=0.0)
    norm = float(np.sqrt(np.sum(z * z)))
    if norm == 0.0:
        return np.zeros_like(z), True
    return z / norm, False


def motif_stats(g: DirectedGraph, e: FittedEnsemble) -> list[MotifStats]:
    """Observed, expected, std, z and SP for the 3 dyadic and 13 triadic motifs."""
    if g.n != e.n:
        raise ValueError(f"ensemble has {e.n} nodes, graph has {g.n}")
    observed = observed_counts(g)
    expected = expected_counts(e)
    variances = motif_variances(e)
    stds = np.array([_std(v, m) for v, m in zip(variances, expected)])
    zs = np.array([_z(o, m, s) for o, m, s in zip(observed, expected, stds)])
    sp, _ = significance_profile(zs[3:])
    sp_full = np.concatenate([[np.nan] * 3, np.where(np.isfinite(zs[3:]), sp, np.nan)])
    return [
        MotifStats(m, int(o), float(mu), float(s), float(z), float(p))
        for m, o, mu, s, z, p in zip(ALL_MOTIFS, observed, expected, stds, zs, sp_full)
    ]
