"""Command-line interface.

Subcommands: ``fit``, ``census``, ``zscore``, ``temporal``, ``sample`` and
``oracle``. Exit codes: 0 success, 1 oracle mismatch, 2 fit failure
(non-convergence or degenerate input), 3 input error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ensembles import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    FitError,
    ModelKind,
    fit,
)
from .io import (
    InputError,
    bundle_from_analyses,
    bundle_from_snapshot,
    load_snapshots,
    write_edge_list,
    write_reports,
    _clean,
    _fmt,
)
from .motifs import ALL_MOTIFS, build_catalog, census_labels, full_triad_census, motif_stats, observed_counts
from .sampling import MAX_EXACT_NODES, enumerate_exact, sample_batch, sample_graph
from .temporal import DEFAULT_THRESHOLD, DEFAULT_WINDOW, analyze_series

log = logging.getLogger("quasieq")

EXIT_OK, EXIT_MISMATCH, EXIT_FIT, EXIT_INPUT = 0, 1, 2, 3


def _models(text: str) -> list[ModelKind]:
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if part:
            kind = ModelKind.parse(part)
            if kind not in out:
                out.append(kind)
    if not out:
        raise argparse.ArgumentTypeError("no model given")
    return out


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _window(text):
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError("window must be at least 2")
    return v


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit code 2 is reserved for fit failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="quasieq",
        description="Maximum-entropy null models, motif z-scores and stationarity of directed network snapshots.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file with default option values")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="edge-list file or directory of snapshot files")
    common.add_argument("--per-snapshot-nodes", action="store_true",
                        help="do not pad snapshots to the common node set")

    fitting = argparse.ArgumentParser(add_help=False)
    fitting.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL)
    fitting.add_argument("--max-iter", type=_positive_int, default=DEFAULT_MAX_ITER)
    fitting.add_argument("--allow-unconverged", action="store_true",
                         help="use the best iterate when a fit misses its tolerance")

    one = argparse.ArgumentParser(add_help=False)
    one.add_argument("--snapshot", help="snapshot label (default: the first one)")

    stdout_fmt = argparse.ArgumentParser(add_help=False)
    stdout_fmt.add_argument("--format", choices=("text", "csv", "json"), default="text")

    p = sub.add_parser("fit", parents=[common, one, fitting, stdout_fmt],
                       help="fit one model to one snapshot")
    p.add_argument("--model", type=ModelKind.parse, default=ModelKind.DCM)

    sub.add_parser("census", parents=[common, one, stdout_fmt], help="observed motif counts")

    p = sub.add_parser("zscore", parents=[common, one, fitting, stdout_fmt],
                       help="motif statistics of one snapshot")
    p.add_argument("--model", type=_models, default=[ModelKind.DCM],
                   help="comma-separated models (drg,dcm,rcm)")
    p.add_argument("--out", help="also write report files to this directory")

    p = sub.add_parser("temporal", parents=[common, fitting], help="analyse a snapshot series")
    p.add_argument("--model", type=_models, default=[ModelKind.DCM, ModelKind.RCM])
    p.add_argument("--threshold", type=_positive_float, default=DEFAULT_THRESHOLD)
    p.add_argument("--window", type=_window, default=DEFAULT_WINDOW)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", default="json,csv", help="comma-separated report formats: json, csv")
    p.add_argument("--seed", type=int, default=None, help="recorded in the report metadata")

    p = sub.add_parser("sample", parents=[common, one, fitting, stdout_fmt],
                       help="draw graphs from a fitted model")
    p.add_argument("--model", type=ModelKind.parse, default=ModelKind.DCM)
    p.add_argument("--samples", type=_positive_int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write each sampled graph as an edge list here")

    p = sub.add_parser("oracle", parents=[common, one, fitting, stdout_fmt],
                       help="exact enumeration cross-check (n <= 5)")
    p.add_argument("--model", type=_models, default=[ModelKind.DRG, ModelKind.DCM, ModelKind.RCM])
    p.add_argument("--tolerance", type=_positive_float, default=1e-10)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            with open(known.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {known.config}: {exc}") from exc
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        for action in parser._subparsers._group_actions:
            for subparser in action.choices.values():
                subparser.set_defaults(**cfg)
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------


def _pick_snapshot(series, label):
    if label is None:
        return series.labels[0], series.graphs[0]
    try:
        i = series.labels.index(label)
    except ValueError:
        raise InputError(f"no snapshot labelled {label!r}") from None
    return series.labels[i], series.graphs[i]


def _emit_table(header, rows, fmt, out):
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating, int, np.integer)) else v for v in r])
        return
    cells = [[str(h) for h in header]]
    for r in rows:
        cells.append([
            f"{v:.6g}" if isinstance(v, (float, np.floating)) else str(v) for v in r
        ])
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    for row in cells:
        out.write("  ".join(c.rjust(wd) for c, wd in zip(row, widths)) + "\n")


def _json(obj, out):
    json.dump(_clean(obj), out, indent=2, allow_nan=False)
    out.write("\n")


def cmd_fit(args, out):
    series = load_snapshots(args.input, args.per_snapshot_nodes)
    label, g = _pick_snapshot(series, args.snapshot)
    e = fit(g, args.model, args.tol, args.max_iter, args.allow_unconverged)
    if args.format == "json":
        _json({"snapshot": label, **e.parameters()}, out)
        return EXIT_OK
    names = g.node_labels or tuple(str(i) for i in range(g.n))
    exp = e.expected_constraints()
    deg = g.degrees()
    if e.kind is ModelKind.DRG:
        header = ["p", "x", "links", "expected_links"]
        rows = [[e.p, float(e.x[0]), g.n_links, float(exp["k_out"].sum())]]
    elif e.kind is ModelKind.DCM:
        header = ["node", "x", "y", "k_out", "exp_k_out", "k_in", "exp_k_in"]
        rows = [[names[i], e.x[i], e.y[i], int(deg.k_out[i]), exp["k_out"][i], int(deg.k_in[i]), exp["k_in"][i]]
                for i in range(g.n)]
    else:
        header = ["node", "x", "y", "z", "k_right", "exp_k_right", "k_left", "exp_k_left", "k_both", "exp_k_both"]
        rows = [[names[i], e.x[i], e.y[i], e.z[i],
                 int(deg.k_right[i]), exp["k_right"][i],
                 int(deg.k_left[i]), exp["k_left"][i],
                 int(deg.k_both[i]), exp["k_both"][i]] for i in range(g.n)]
    if args.format == "text":
        out.write(
            f"# snapshot {label}: {e.kind.value} n={g.n} L={g.n_links} residual={e.residual:.3e} "
            f"iterations={e.iterations} converged={e.converged}\n"
        )
    _emit_table(header, rows, args.format, out)
    return EXIT_OK


def cmd_census(args, out):
    series = load_snapshots(args.input, args.per_snapshot_nodes)
    label, g = _pick_snapshot(series, args.snapshot)
    census = full_triad_census(g)
    ordered = observed_counts(g)
    cat = build_catalog()
    rows = []
    for m, count in zip(ALL_MOTIFS[:3], ordered[:3]):
        rows.append([m.label, "dyad", int(count), ""])
    for c, name in zip(cat.classes, census_labels()):
        ordered_count = int(census[c.census_index]) * c.automorphisms
        rows.append([name, c.name, ordered_count, int(census[c.census_index])])
    if args.format == "json":
        _json({"snapshot": label, "n": g.n, "links": g.n_links,
               "counts": [dict(zip(("motif", "class", "ordered", "unordered"), r)) for r in rows]}, out)
        return EXIT_OK
    if args.format == "text":
        out.write(f"# snapshot {label}: n={g.n} L={g.n_links}\n")
    _emit_table(["motif", "class", "ordered", "unordered"], rows, args.format, out)
    return EXIT_OK


def _stats_rows(label, kind, stats):
    return [[label, kind.value, s.motif.label, s.observed, s.expected, s.std_dev, s.z, s.sp] for s in stats]


def cmd_zscore(args, out):
    series = load_snapshots(args.input, args.per_snapshot_nodes)
    label, g = _pick_snapshot(series, args.snapshot)
    fits = []
    for kind in args.model:
        e = fit(g, kind, args.tol, args.max_iter, args.allow_unconverged)
        fits.append((e, motif_stats(g, e)))
    bundle = bundle_from_snapshot(label, g, fits, config=_config_of(args))
    if args.out:
        write_reports(bundle, args.out)
    if args.format == "json":
        from .io import bundle_to_dict
        _json(bundle_to_dict(bundle), out)
        return EXIT_OK
    rows = [r for e, stats in fits for r in _stats_rows(label, e.kind, stats)]
    _emit_table(["snapshot", "model", "motif", "observed", "expected", "std", "z", "sp"], rows, args.format, out)
    return EXIT_OK


def _config_of(args) -> dict:
    keep = {}
    for k, v in sorted(vars(args).items()):
        if k in ("config", "verbose", "input", "out"):
            continue
        if isinstance(v, list):
            v = [x.value if isinstance(x, ModelKind) else x for x in v]
        elif isinstance(v, ModelKind):
            v = v.value
        keep[k] = v
    return keep


def cmd_temporal(args, out):
    series = load_snapshots(args.input, args.per_snapshot_nodes)
    formats = [f for f in args.format.split(",") if f.strip()]
    analyses = [
        analyze_series(series, kind, args.tol, args.max_iter, args.threshold, args.window, args.allow_unconverged)
        for kind in args.model
    ]
    bundle = bundle_from_analyses(analyses, config=_config_of(args), seed=args.seed)
    paths = write_reports(bundle, args.out, formats)
    for an in analyses:
        rep = an.report
        segs = ", ".join(f"{series.labels[a]}..{series.labels[b - 1]}" for a, b in rep.segments)
        out.write(
            f"{an.model.value}: collapse score {rep.collapse_score:.4f} "
            f"({'stationary' if rep.stationary else 'non-stationary'} at {rep.threshold:g}); "
            f"{len(rep.segments)} segment(s): {segs}; {len(rep.events)} trend event(s)\n"
        )
    for p in paths:
        out.write(f"wrote {p}\n")
    return EXIT_OK


def cmd_sample(args, out):
    series = load_snapshots(args.input, args.per_snapshot_nodes)
    label, g = _pick_snapshot(series, args.snapshot)
    e = fit(g, args.model, args.tol, args.max_iter, args.allow_unconverged)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        width = max(5, len(str(args.samples - 1)))
        for s in range(args.samples):
            h = sample_graph(e, seed=args.seed, sample_id=s)
            if g.node_labels is not None:
                h = type(h)(h.adjacency, g.node_labels)
            write_edge_list(h, outdir / f"sample_{s:0{width}d}.edges")
    batch = sample_batch(e, args.samples, seed=args.seed)
    from .motifs import expected_counts, motif_variances
    mu = expected_counts(e)
    sd = np.sqrt(motif_variances(e))
    sd_sample = batch.std() if batch.size > 1 else np.full(len(mu), np.nan)
    rows = [[m.label, mu[k], float(batch.mean()[k]), sd[k], float(sd_sample[k])] for k, m in enumerate(ALL_MOTIFS)]
    header = ["motif", "expected", "sample_mean", "std", "sample_std"]
    if args.format == "json":
        _json({"snapshot": label, "model": e.kind.value, "samples": batch.size, "seed": args.seed,
               "motifs": [dict(zip(header, r)) for r in rows]}, out)
        return EXIT_OK
    if args.format == "text":
        out.write(f"# {batch.size} samples from {e.kind.value} fitted to {label}, seed {args.seed}\n")
    _emit_table(header, rows, args.format, out)
    return EXIT_OK


def cmd_oracle(args, out):
    series = load_snapshots(args.input, args.per_snapshot_nodes)
    label, g = _pick_snapshot(series, args.snapshot)
    if g.n > MAX_EXACT_NODES:
        raise InputError(f"oracle needs n <= {MAX_EXACT_NODES}, snapshot {label} has {g.n} nodes")
    from .motifs import expected_counts, motif_variances
    rows = []
    worst = 0.0
    for kind in args.model:
        e = fit(g, kind, args.tol, args.max_iter, args.allow_unconverged)
        exact = enumerate_exact(e)
        mu, var = expected_counts(e), motif_variances(e)
        for k, m in enumerate(ALL_MOTIFS):
            dm = abs(mu[k] - exact.mean[k])
            dv = abs(var[k] - exact.var[k])
            worst = max(worst, dm, dv)
            rows.append([kind.value, m.label, mu[k], exact.mean[k], var[k], exact.var[k], max(dm, dv)])
    header = ["model", "motif", "expected", "exact_mean", "variance", "exact_variance", "abs_diff"]
    ok = worst <= args.tolerance
    if args.format == "json":
        _json({"snapshot": label, "max_abs_diff": worst, "tolerance": args.tolerance, "ok": ok,
               "rows": [dict(zip(header, r)) for r in rows]}, out)
    else:
        _emit_table(header, rows, args.format, out)
        if args.format == "text":
            out.write(f"# max abs difference {worst:.3e} ({'ok' if ok else 'MISMATCH'} at {args.tolerance:g})\n")
    return EXIT_OK if ok else EXIT_MISMATCH


COMMANDS = {
    "fit": cmd_fit,
    "census": cmd_census,
    "zscore": cmd_zscore,
    "temporal": cmd_temporal,
    "sample": cmd_sample,
    "oracle": cmd_oracle,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except InputError as exc:
        print(f"quasieq: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args, out)
    except (InputError, KeyError, UnicodeDecodeError) as exc:
        print(f"quasieq: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FitError as exc:
        print(f"quasieq: fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except ValueError as exc:
        print(f"quasieq: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"quasieq: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
