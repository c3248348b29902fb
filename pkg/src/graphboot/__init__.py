"""Bootstrap inference for motif densities of exchangeable random graphs.

The package provides two bootstraps for a single observed simple graph —
vertex resampling through the empirical step-function link, and a sieve
bootstrap through a balanced-histogram block model — plus the exact
combinatorial calculus (merged-copy second moments, collision-partition
expected densities) needed to center, scale, and validate them.
"""

__version__ = "0.1.0"

from .bootstrap import (
    BootstrapPlan,
    BootstrapResult,
    empirical_bootstrap_replicate,
    histogram_bootstrap_replicate,
    ks_two_sample,
    percentile_interval,
    run_bootstrap,
    sampling_distribution_truth,
)
from .census import DensityReport, count_induced_copies, motif_density
from .combinatorics import (
    EmpiricalProvider,
    HistogramProvider,
    TrueGraphonProvider,
    brute_force_moments,
    expected_motif_density,
    merge_collision_catalog,
    merged_copy_catalog,
    variance_sigma2,
)
from .errors import GraphbootError
from .estimators import (
    EmpiricalGraphon,
    HistogramModel,
    empirical_link,
    estimator_error,
    fit_histogram,
    select_bin_count,
)
from .graphs import (
    Graph,
    Motif,
    canonical_label,
    labeled_copy_count,
    load_graph,
    parse_motif_literal,
    save_graph,
)
from .graphons import (
    GraphonSpec,
    LatentSample,
    SparsitySchedule,
    link_probability,
    sample_graph,
    true_motif_probability,
)

__all__ = [
    "__version__",
    "BootstrapPlan",
    "BootstrapResult",
    "DensityReport",
    "EmpiricalGraphon",
    "EmpiricalProvider",
    "Graph",
    "GraphbootError",
    "GraphonSpec",
    "HistogramModel",
    "HistogramProvider",
    "LatentSample",
    "Motif",
    "SparsitySchedule",
    "TrueGraphonProvider",
    "brute_force_moments",
    "canonical_label",
    "count_induced_copies",
    "empirical_bootstrap_replicate",
    "empirical_link",
    "estimator_error",
    "expected_motif_density",
    "fit_histogram",
    "histogram_bootstrap_replicate",
    "ks_two_sample",
    "labeled_copy_count",
    "link_probability",
    "load_graph",
    "merge_collision_catalog",
    "merged_copy_catalog",
    "motif_density",
    "parse_motif_literal",
    "percentile_interval",
    "run_bootstrap",
    "sample_graph",
    "sampling_distribution_truth",
    "save_graph",
    "select_bin_count",
    "true_motif_probability",
    "variance_sigma2",
]
