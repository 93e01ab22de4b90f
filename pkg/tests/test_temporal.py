import math

import numpy as np
import pytest

from quasieq import (
    DirectedGraph,
    SnapshotSeries,
    analyze_series,
    collapse_score,
    detect_trend_inversion,
    sample_graph,
    segment_subperiods,
)
from quasieq.temporal import SnapshotFitError, profile_distances
from synthetic import block_graph, dag_graph, labels, random_graph, reciprocal_rcm, ring_graph


def unit(k, sign=1.0):
    v = np.zeros(13)
    v[k] = sign
    return v


# --- collapse score ------------------------------------------------------------


def test_collapse_examples():
    assert collapse_score(np.tile(unit(0), (4, 1))) == 0.0
    assert collapse_score(np.array([unit(0), unit(0, -1)])) == 2.0
    assert collapse_score(np.array([unit(0), unit(1)])) == pytest.approx(math.sqrt(2), rel=1e-15)


def test_collapse_skips_zero_rows():
    sp = np.array([unit(0), np.zeros(13), unit(1)])
    with pytest.warns(UserWarning, match="all-zero"):
        assert collapse_score(sp) == pytest.approx(math.sqrt(2))
    d = profile_distances(sp)
    assert np.isnan(d[1]).all() and np.isnan(d[:, 1]).all()


def test_collapse_needs_two_rows():
    with pytest.raises(ValueError):
        collapse_score(unit(0)[None, :])


# --- segmentation --------------------------------------------------------------


def test_identical_rows_one_segment():
    sp = np.tile(np.full(13, 1 / math.sqrt(13)), (7, 1))
    assert segment_subperiods(sp, 0.01) == [(0, 7)]


def test_alternating_antipodal_rows_split_everywhere():
    sp = np.array([unit(2, (-1) ** t) for t in range(6)])
    assert segment_subperiods(sp, 0.1) == [(t, t + 1) for t in range(6)]


def test_segments_partition_range():
    rng = np.random.default_rng(0)
    sp = rng.normal(size=(15, 13))
    sp /= np.linalg.norm(sp, axis=1, keepdims=True)
    segs = segment_subperiods(sp, 1.2)
    assert segs[0][0] == 0 and segs[-1][1] == 15
    assert all(a[1] == b[0] for a, b in zip(segs, segs[1:]))
    assert all(a < b for a, b in segs)


def test_zero_rows_join_current_segment():
    sp = np.array([unit(0), unit(0), np.zeros(13), unit(0), unit(5), unit(5)])
    assert segment_subperiods(sp, 0.5) == [(0, 4), (4, 6)]


def test_segmentation_rejects_bad_threshold():
    with pytest.raises(ValueError):
        segment_subperiods(np.tile(unit(0), (3, 1)), 0.0)


# --- trend inversion -----------------------------------------------------------


def test_constant_series_has_no_events():
    for c in (-4.0, 0.0, 2.5):
        assert detect_trend_inversion(np.full(16, c), 4) == []


def test_step_series_single_upward_event():
    events = detect_trend_inversion([-3] * 4 + [3] * 4, 4, motif="single")
    assert len(events) == 1
    ev = events[0]
    assert (ev.index, ev.direction, ev.motif) == (4, "up", "single")


def test_peak_series_downward_event():
    z = 5.0 - 0.5 * np.abs(np.arange(17) - 8)  # peak at index 8
    events = detect_trend_inversion(z, 4)
    assert len(events) == 1
    assert abs(events[0].index - 8) <= 1
    assert (events[0].direction, events[0].kind) == ("down", "trend")


def test_insignificant_series_has_no_events():
    z = np.concatenate([np.linspace(-0.5, 0.9, 6), np.linspace(0.9, -0.5, 6)])
    assert detect_trend_inversion(z, 3) == []


def test_nan_breaks_series_into_runs():
    z = np.array([-3] * 4 + [np.nan] + [3] * 4)
    assert detect_trend_inversion(z, 4) == []
    z = np.array([-3] * 4 + [3] * 4 + [np.nan] + [3] * 4 + [-3] * 4, dtype=float)
    events = detect_trend_inversion(z, 4)
    assert [(e.index, e.direction) for e in events] == [(4, "up"), (13, "down")]


@pytest.mark.parametrize("z, window", [(np.zeros(7), 4), (np.zeros(10), 1)])
def test_detector_preconditions(z, window):
    with pytest.raises(ValueError):
        detect_trend_inversion(z, window)


# --- series pipeline -----------------------------------------------------------


def test_identical_snapshots_collapse_to_zero():
    g = random_graph(25, 0.2, np.random.default_rng(1))
    an = analyze_series(SnapshotSeries(labels(6), [g] * 6), "rcm")
    assert an.report.collapse_score == 0.0
    assert an.report.segments == [(0, 6)]
    assert np.all(an.report.sp_matrix == an.report.sp_matrix[0])
    assert an.report.sp_matrix.shape == (6, 13)
    assert an.z_matrix.shape == (6, 16)


@pytest.mark.filterwarnings("ignore::quasieq.ensembles.NearSaturationWarning")
def test_fit_failure_reports_snapshot():
    good = random_graph(5, 0.4, np.random.default_rng(0))
    complete = DirectedGraph(1 - np.eye(5, dtype=int))
    with pytest.raises(SnapshotFitError) as info:
        analyze_series(SnapshotSeries(["a", "b", "c"], [good, complete, good]), "dcm")
    assert info.value.index == 1 and info.value.label == "b"


def test_series_validation():
    g = random_graph(5, 0.4, np.random.default_rng(0))
    with pytest.raises(ValueError):
        SnapshotSeries(["a", "a"], [g, g])
    with pytest.raises(ValueError):
        analyze_series(SnapshotSeries(["a"], [g]), "dcm")


N = 60
GEN = reciprocal_rcm(N)


def test_fixed_rcm_series_is_stationary():
    graphs = [sample_graph(GEN, seed=3, sample_id=s) for s in range(20)]
    rep = analyze_series(SnapshotSeries(labels(20), graphs), "dcm").report
    assert rep.collapse_score < 0.5
    assert rep.stationary and rep.segments == [(0, 20)]


def test_structural_break_found():
    rng = np.random.default_rng(7)
    graphs = [sample_graph(GEN, seed=7, sample_id=s) for s in range(10)]
    graphs += [dag_graph(N, rng) for _ in range(10)]
    rep = analyze_series(SnapshotSeries(labels(20), graphs), "dcm").report
    assert any(abs(a - 10) <= 1 for a, _ in rep.segments[1:])


def test_four_regimes_four_segments():
    rng = np.random.default_rng(8)
    graphs = [sample_graph(GEN, seed=8, sample_id=s) for s in range(5)]
    graphs += [dag_graph(N, rng) for _ in range(5)]
    graphs += [ring_graph(N, rng) for _ in range(5)]
    graphs += [block_graph(N, rng) for _ in range(5)]
    rep = analyze_series(SnapshotSeries(labels(20), graphs), "dcm").report
    assert rep.segments == [(0, 5), (5, 10), (10, 15), (15, 20)]
