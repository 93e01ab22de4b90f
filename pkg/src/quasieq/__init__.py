"""Maximum-entropy null models and motif statistics for directed network snapshots."""

__version__ = "0.1.0"

from .ensembles import (  # noqa: E402
    ConvergenceError,
    DegenerateGraphError,
    FitError,
    FittedEnsemble,
    ModelKind,
    dyad_probabilities,
    fit,
    fit_dcm,
    fit_drg,
    fit_rcm,
    log_likelihood,
)
from .graph import DegreeVectors, DirectedGraph, DyadState, compute_degrees, dyad_state  # noqa: E402
from .motifs import (  # noqa: E402
    ALL_MOTIFS,
    MotifId,
    MotifStats,
    build_catalog,
    count_motif,
    expected_motif,
    full_triad_census,
    motif_stats,
    motif_variance,
    significance_profile,
    z_score,
)
from .sampling import enumerate_exact, sample_batch, sample_graph  # noqa: E402
from .temporal import (  # noqa: E402
    SnapshotSeries,
    analyze_series,
    collapse_score,
    detect_trend_inversion,
    segment_subperiods,
)

__all__ = [
    "ALL_MOTIFS",
    "ConvergenceError",
    "DegenerateGraphError",
    "DegreeVectors",
    "DirectedGraph",
    "DyadState",
    "FitError",
    "FittedEnsemble",
    "ModelKind",
    "MotifId",
    "MotifStats",
    "SnapshotSeries",
    "analyze_series",
    "build_catalog",
    "collapse_score",
    "compute_degrees",
    "count_motif",
    "detect_trend_inversion",
    "dyad_probabilities",
    "dyad_state",
    "enumerate_exact",
    "expected_motif",
    "fit",
    "fit_dcm",
    "fit_drg",
    "fit_rcm",
    "full_triad_census",
    "log_likelihood",
    "motif_stats",
    "motif_variance",
    "sample_batch",
    "sample_graph",
    "segment_subperiods",
    "significance_profile",
    "z_score",
]
