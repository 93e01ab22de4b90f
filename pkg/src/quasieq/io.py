"""Edge-list ingestion and report serialisation.

Input
    Either a directory holding one edge-list file per snapshot (taken in
    lexicographic filename order) or a single file. A single file with two
    fields per record is one snapshot; with three fields the first one is
    the snapshot key. Fields are comma separated if the first record of the
    file contains a comma and whitespace separated otherwise. Blank lines
    and lines starting with ``#`` are skipped.

Output
    ``report.json`` (everything, hierarchical), ``zscores.csv`` (one row per
    snapshot, model and motif) and ``profiles.csv`` (one row per snapshot
    and model, one column per triadic motif). Floats are written with 17
    significant digits so the files round-trip exactly.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .ensembles import FittedEnsemble
from .graph import DirectedGraph
from .motifs import ALL_MOTIFS, TRIADIC_MOTIFS, MotifStats
from .temporal import SeriesAnalysis, SnapshotSeries, StationarityReport

log = logging.getLogger(__name__)

REPORT_JSON = "report.json"
ZSCORES_CSV = "zscores.csv"
PROFILES_CSV = "profiles.csv"
ZSCORE_COLUMNS = ("snapshot", "model", "motif", "observed", "expected", "std", "z", "sp")


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# reading


def _records(path: Path):
    """Yield ``(line_number, fields)`` for the data lines of one file."""
    sep = None
    decided = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not decided:
                sep = "," if "," in line else None
                decided = True
            fields = [f.strip() for f in line.split(sep)] if sep else line.split()
            if any(not f for f in fields):
                raise InputError(f"{path}:{lineno}: empty field in {line!r}")
            yield lineno, fields


def _edges_of(path: Path, width: int | None = None):
    rows = []
    for lineno, fields in _records(path):
        if width is None:
            width = len(fields)
            if width not in (2, 3):
                raise InputError(f"{path}:{lineno}: expected 2 or 3 fields, got {len(fields)}")
        elif len(fields) != width:
            raise InputError(f"{path}:{lineno}: expected {width} fields, got {len(fields)}")
        rows.append(tuple(fields))
    return width, rows


def _sort_keys(keys: Iterable[str]) -> list[str]:
    keys = list(keys)
    try:
        return sorted(keys, key=float)
    except ValueError:
        return sorted(keys)


def load_snapshots(
    path: "str | os.PathLike",
    per_snapshot_nodes: bool = False,
    node_labels: Sequence[str] | None = None,
) -> SnapshotSeries:
    """Read a snapshot series from a directory or a single edge-list file.

    By default every snapshot shares the union of all node labels (nodes
    absent from a snapshot are isolated there). ``node_labels`` fixes the
    order of known labels, e.g. the map stored in an earlier report; unseen
    labels are appended in first-seen order.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file or directory")
    snapshots: list[tuple[str, list[tuple[str, str]]]] = []
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith("."))
        if not files:
            raise InputError(f"{path}: directory holds no edge-list files")
        for f in files:
            _, rows = _edges_of(f, width=2)
            snapshots.append((f.stem, rows))
    else:
        width, rows = _edges_of(path)
        if width == 3:
            grouped: dict[str, list] = {}
            for t, src, dst in rows:
                grouped.setdefault(t, []).append((src, dst))
            snapshots = [(k, grouped[k]) for k in _sort_keys(grouped)]
        else:
            snapshots = [(path.stem, rows)]
    if not snapshots:
        raise InputError(f"{path}: no edges found")

    for label, rows in snapshots:
        if not rows:
            warnings.warn(f"snapshot {label!r} has no edges", stacklevel=2)

    order: dict[str, int] = {}
    for lab in node_labels or ():
        order.setdefault(str(lab), len(order))
    for _, rows in snapshots:
        for src, dst in rows:
            order.setdefault(src, len(order))
            order.setdefault(dst, len(order))
    common = tuple(order)

    graphs = []
    for label, rows in snapshots:
        if per_snapshot_nodes:
            g = DirectedGraph.from_edges(rows)
        else:
            g = DirectedGraph.from_edges(rows, labels=common)
        if g.dropped_self_loops:
            log.warning("snapshot %s: dropped %d self-loop(s)", label, g.dropped_self_loops)
        if g.duplicate_edges:
            log.info("snapshot %s: collapsed %d duplicate edge(s)", label, g.duplicate_edges)
        graphs.append(g)
    return SnapshotSeries(
        labels=tuple(lab for lab, _ in snapshots),
        graphs=tuple(graphs),
        node_labels=None if per_snapshot_nodes else common,
    )


def write_edge_list(g: DirectedGraph, path: "str | os.PathLike") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for src, dst in g.labelled_edges():
            fh.write(f"{src} {dst}\n")


# ---------------------------------------------------------------------------
# report bundle


@dataclass
class SnapshotResult:
    index: int
    label: str
    n: int
    links: int
    ensemble: FittedEnsemble
    stats: list[MotifStats]


@dataclass
class ReportBundle:
    metadata: dict
    results: list[SnapshotResult] = field(default_factory=list)
    series: dict[str, StationarityReport] = field(default_factory=dict)


def bundle_from_analyses(
    analyses: Sequence[SeriesAnalysis],
    config: dict | None = None,
    seed: int | None = None,
) -> ReportBundle:
    if not analyses:
        raise ValueError("nothing to report")
    series = analyses[0].series
    bundle = ReportBundle(metadata=_metadata(series.node_labels, config, seed))
    for idx, label in enumerate(series.labels):
        for an in analyses:
            g = an.series.graphs[idx]
            bundle.results.append(
                SnapshotResult(idx, label, g.n, g.n_links, an.fits[idx], an.stats[idx])
            )
    for an in analyses:
        bundle.series[an.model.value] = an.report
    return bundle


def bundle_from_snapshot(
    label: str,
    g: DirectedGraph,
    fits: Sequence[tuple[FittedEnsemble, list[MotifStats]]],
    config: dict | None = None,
    seed: int | None = None,
) -> ReportBundle:
    bundle = ReportBundle(metadata=_metadata(g.node_labels, config, seed))
    for e, stats in fits:
        bundle.results.append(SnapshotResult(0, label, g.n, g.n_links, e, stats))
    return bundle


def _metadata(node_labels, config, seed) -> dict:
    return {
        "tool": "quasieq",
        "version": __version__,
        "seed": seed,
        "config": dict(config or {}),
        "node_labels": list(node_labels) if node_labels is not None else None,
    }


def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _stats_dict(s: MotifStats) -> dict:
    return {
        "motif": s.motif.label,
        "observed": s.observed,
        "expected": s.expected,
        "std": s.std_dev,
        "z": s.z,
        "sp": s.sp,
    }


def _series_dict(rep: StationarityReport, labels: Sequence[str]) -> dict:
    return {
        "threshold": rep.threshold,
        "window": rep.window,
        "collapse_score": rep.collapse_score,
        "stationary": rep.stationary,
        "sp_matrix": rep.sp_matrix,
        "sp_flags": rep.sp_flags,
        "distances": rep.distances,
        "segments": [
            {"start": a, "stop": b, "first": labels[a], "last": labels[b - 1]}
            for a, b in rep.segments
        ],
        "events": [
            {
                "motif": ev.motif,
                "index": ev.index,
                "snapshot": labels[ev.index],
                "direction": ev.direction,
                "kind": ev.kind,
                "strength": ev.strength,
            }
            for ev in rep.events
        ],
    }


def bundle_to_dict(bundle: ReportBundle) -> dict:
    snapshots: dict[int, dict] = {}
    for r in bundle.results:
        entry = snapshots.setdefault(
            r.index, {"index": r.index, "label": r.label, "n": r.n, "links": r.links, "models": {}}
        )
        entry["models"][r.ensemble.kind.value] = {
            "parameters": r.ensemble.parameters(),
            "motifs": [_stats_dict(s) for s in r.stats],
        }
    labels = [snapshots[i]["label"] for i in sorted(snapshots)]
    return _clean(
        {
            "metadata": bundle.metadata,
            "snapshots": [snapshots[i] for i in sorted(snapshots)],
            "series": {k: _series_dict(v, labels) for k, v in bundle.series.items()},
        }
    )


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def write_reports(
    bundle: ReportBundle,
    outdir: "str | os.PathLike",
    formats: Iterable[str] = ("json", "csv"),
) -> list[Path]:
    """Write the requested report files and return their paths."""
    formats = {f.strip().lower() for f in formats}
    unknown = formats - {"json", "csv"}
    if unknown:
        raise ValueError(f"unknown report format(s): {', '.join(sorted(unknown))}")
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {outdir}: {exc}") from exc
    written = []
    if "json" in formats:
        p = outdir / REPORT_JSON
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(bundle_to_dict(bundle), fh, indent=2, allow_nan=False)
            fh.write("\n")
        written.append(p)
    if "csv" in formats:
        p = outdir / ZSCORES_CSV
        with open(p, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ZSCORE_COLUMNS)
            for r in bundle.results:
                for s in r.stats:
                    w.writerow([
                        r.label, r.ensemble.kind.value, s.motif.label,
                        _fmt(s.observed), _fmt(s.expected), _fmt(s.std_dev), _fmt(s.z), _fmt(s.sp),
                    ])
        written.append(p)
        p = outdir / PROFILES_CSV
        with open(p, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["snapshot", "model"] + [m.label for m in TRIADIC_MOTIFS])
            for r in bundle.results:
                sp = [0.0 if math.isnan(s.sp) else s.sp for s in r.stats[3:]]
                w.writerow([r.label, r.ensemble.kind.value] + [_fmt(v) for v in sp])
        written.append(p)
    return written


def read_profiles(path: "str | os.PathLike") -> dict[str, tuple[list[str], np.ndarray]]:
    """Read ``profiles.csv`` back as ``{model: (snapshot labels, SP matrix)}``."""
    out: dict[str, tuple[list[str], list]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["snapshot", "model"] or len(header) != 2 + len(TRIADIC_MOTIFS):
            raise InputError(f"{path}: not a profiles table")
        for row in reader:
            labels, rows = out.setdefault(row[1], ([], []))
            labels.append(row[0])
            rows.append([float(v) for v in row[2:]])
    return {k: (labs, np.array(rows)) for k, (labs, rows) in out.items()}


def read_zscores(path: "str | os.PathLike") -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != ZSCORE_COLUMNS:
            raise InputError(f"{path}: not a z-score table")
        rows = []
        for row in reader:
            rec = dict(row)
            rec["observed"] = int(rec["observed"])
            for key in ("expected", "std", "z", "sp"):
                rec[key] = float(rec[key])
            rows.append(rec)
    return rows


def read_report(path: "str | os.PathLike") -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def motif_labels() -> list[str]:
    return [m.label for m in ALL_MOTIFS]
