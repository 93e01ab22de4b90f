"""Snapshot series: per-snapshot fits, profile collapse, segmentation, trend inversions."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ensembles import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    FitError,
    FittedEnsemble,
    ModelKind,
    fit,
)
from .graph import DirectedGraph
from .motifs import ALL_MOTIFS, MotifStats, motif_stats

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.5
DEFAULT_WINDOW = 4
# both half-windows must have mean |z| above this to count as significant
SIGNIFICANT_Z = 1.0


class SnapshotFitError(FitError):
    def __init__(self, index: int, label: str, cause: Exception):
        super().__init__(f"snapshot {index} ({label}): {cause}")
        self.index = index
        self.label = label
        self.cause = cause


@dataclass(frozen=True)
class SnapshotSeries:
    labels: tuple[str, ...]
    graphs: tuple[DirectedGraph, ...]
    node_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if len(self.labels) != len(self.graphs):
            raise ValueError("need one label per snapshot")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("snapshot labels must be distinct")

    def __len__(self):
        return len(self.graphs)

    def subseries(self, indices: Sequence[int]) -> "SnapshotSeries":
        return SnapshotSeries(
            tuple(self.labels[i] for i in indices),
            tuple(self.graphs[i] for i in indices),
            self.node_labels,
        )


@dataclass(frozen=True)
class TrendEvent:
    motif: str
    index: int
    direction: str  # "up" or "down"
    kind: str  # "trend" (slope reversal) or "level" (z changes sign)
    strength: float


@dataclass
class StationarityReport:
    model: ModelKind
    sp_matrix: np.ndarray  # snapshots x 13
    sp_flags: np.ndarray  # True where the profile norm was zero
    collapse_score: float
    distances: np.ndarray  # snapshots x snapshots, nan for flagged rows
    segments: list[tuple[int, int]]  # half-open [start, stop)
    events: list[TrendEvent]
    threshold: float
    window: int

    @property
    def stationary(self) -> bool:
        return self.collapse_score < self.threshold


@dataclass
class SeriesAnalysis:
    series: SnapshotSeries
    model: ModelKind
    fits: list[FittedEnsemble]
    stats: list[list[MotifStats]]
    report: StationarityReport
    z_matrix: np.ndarray = field(repr=False)  # snapshots x 16 (ALL_MOTIFS)


def _valid_rows(sp: np.ndarray) -> np.ndarray:
    return np.any(sp != 0.0, axis=1)


def profile_distances(sp_matrix) -> np.ndarray:
    sp = np.asarray(sp_matrix, dtype=float)
    diff = sp[:, None, :] - sp[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    bad = ~_valid_rows(sp)
    dist[bad, :] = np.nan
    dist[:, bad] = np.nan
    return dist


def collapse_score(sp_matrix) -> float:
    """Largest Euclidean distance between two significance profiles.

    Rows are unit vectors, so the score lies in ``[0, 2]``. All-zero rows
    (profiles with undefined norm) are left out.
    """
    sp = np.asarray(sp_matrix, dtype=float)
    if sp.ndim != 2 or sp.shape[0] < 2:
        raise ValueError("need at least two profiles")
    valid = _valid_rows(sp)
    if not valid.all():
        warnings.warn(f"ignoring {int((~valid).sum())} all-zero profile(s)", stacklevel=2)
    dist = profile_distances(sp)[np.ix_(valid, valid)]
    return float(dist.max()) if dist.size else 0.0


def _unit_mean(rows: np.ndarray) -> np.ndarray | None:
    m = rows.mean(axis=0)
    norm = np.linalg.norm(m)
    if norm < 1e-12:
        return None
    return m / norm


def segment_subperiods(sp_matrix, threshold: float = DEFAULT_THRESHOLD) -> list[tuple[int, int]]:
    """Greedy left-to-right split into quasi-stationary segments.

    A snapshot joins the current segment if, after adding it, every profile
    of the segment lies within ``threshold`` of the segment's renormalised
    mean profile; otherwise it opens a new segment. All-zero profiles join
    the current segment without being tested.
    """
    sp = np.asarray(sp_matrix, dtype=float)
    if sp.ndim != 2 or sp.shape[0] < 2:
        raise ValueError("need at least two profiles")
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    valid = _valid_rows(sp)
    segments = []
    start = 0
    members: list[int] = []
    for r in range(sp.shape[0]):
        if not valid[r] or not members:
            if valid[r]:
                members.append(r)
            continue
        trial = members + [r]
        centre = _unit_mean(sp[trial])
        ok = centre is not None and bool(
            np.all(np.linalg.norm(sp[trial] - centre, axis=1) <= threshold)
        )
        if ok:
            members = trial
        else:
            segments.append((start, r))
            start, members = r, [r]
    segments.append((start, sp.shape[0]))
    return segments


def _slope(y: np.ndarray) -> float:
    x = np.arange(len(y)) - (len(y) - 1) / 2.0
    return float(np.dot(x, y - y.mean()) / np.dot(x, x))


def _runs(z: np.ndarray):
    """Maximal runs of finite values as (offset, values)."""
    finite = np.isfinite(z)
    start = None
    for i, ok in enumerate(np.append(finite, False)):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            yield start, z[start:i]
            start = None


def detect_trend_inversion(z_series, window: int = DEFAULT_WINDOW, motif: str = "") -> list[TrendEvent]:
    """Locate sign inversions of a z-score trajectory.

    At every pivot ``t`` the ``window`` values before ``t`` and the
    ``window`` values from ``t`` on are compared. The pivot is a candidate
    when both halves are significant (mean ``|z|`` above 1) and either their
    regression slopes have opposite signs (the trend reverses) or their
    means have opposite signs (z itself changes sign). Consecutive candidates
    with the same direction are merged into one event at the strongest pivot.
    Undefined (nan) entries split the series into independent runs.
    """
    z = np.asarray(z_series, dtype=float)
    if window < 2:
        raise ValueError("window must be at least 2")
    if z.ndim != 1 or len(z) < 2 * window:
        raise ValueError(f"need at least {2 * window} values for window {window}")
    events: list[TrendEvent] = []
    for offset, run in _runs(z):
        candidates = []
        for t in range(window, len(run) - window + 1):
            left, right = run[t - window:t], run[t:t + window]
            if np.mean(np.abs(left)) <= SIGNIFICANT_Z or np.mean(np.abs(right)) <= SIGNIFICANT_Z:
                continue
            s_left, s_right = _slope(left), _slope(right)
            m_left, m_right = left.mean(), right.mean()
            if s_left * s_right < 0:
                up = s_right > s_left
                strength = abs(s_right - s_left) * window
                kind = "trend"
            elif m_left * m_right < 0:
                up = m_right > m_left
                strength = abs(m_right - m_left)
                kind = "level"
            else:
                continue
            candidates.append((offset + t, "up" if up else "down", kind, strength))
        group: list = []
        for cand in candidates + [None]:
            if group and (cand is None or cand[0] != group[-1][0] + 1 or cand[1] != group[-1][1]):
                best = max(group, key=lambda c: c[3])
                events.append(TrendEvent(motif, best[0], best[1], best[2], float(best[3])))
                group = []
            if cand is not None:
                group.append(cand)
    return events


def analyze_series(
    series: SnapshotSeries,
    model: "ModelKind | str",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    threshold: float = DEFAULT_THRESHOLD,
    window: int = DEFAULT_WINDOW,
    allow_unconverged: bool = False,
) -> SeriesAnalysis:
    """Fit ``model`` to every snapshot independently and analyse the profiles."""
    kind = ModelKind.parse(model)
    if len(series) < 2:
        raise ValueError("a series needs at least two snapshots")
    fits, stats = [], []
    for idx, (label, g) in enumerate(zip(series.labels, series.graphs)):
        try:
            e = fit(g, kind, tol=tol, max_iter=max_iter, allow_unconverged=allow_unconverged)
        except FitError as exc:
            raise SnapshotFitError(idx, label, exc) from exc
        fits.append(e)
        stats.append(motif_stats(g, e))

    z = np.array([[s.z for s in row] for row in stats])
    sp = np.array([[0.0 if np.isnan(s.sp) else s.sp for s in row[3:]] for row in stats])
    flags = ~_valid_rows(sp)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        score = collapse_score(sp)
    segments = segment_subperiods(sp, threshold)

    events: list[TrendEvent] = []
    if len(series) >= 2 * window:
        for col, m in enumerate(ALL_MOTIFS):
            events.extend(detect_trend_inversion(z[:, col], window, motif=m.label))
        events.sort(key=lambda ev: (ev.index, ALL_MOTIFS.index(_motif_by_label(ev.motif))))
    else:
        log.warning("series of %d snapshots is too short for window %d; no trend events", len(series), window)

    report = StationarityReport(
        model=kind,
        sp_matrix=sp,
        sp_flags=flags,
        collapse_score=score,
        distances=profile_distances(sp),
        segments=segments,
        events=events,
        threshold=threshold,
        window=window,
    )
    return SeriesAnalysis(series=series, model=kind, fits=fits, stats=stats, report=report, z_matrix=z)


def _motif_by_label(label: str):
    for m in ALL_MOTIFS:
        if m.label == label:
            return m
    raise KeyError(label)
