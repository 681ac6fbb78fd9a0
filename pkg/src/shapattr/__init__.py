"""Attribution of portfolio performance metrics to strategy features.

A strategy exposes n on/off features (signals, constraints, overlays).
Evaluating the 2^n configurations yields per-metric values; this package
splits each metric's full value into a baseline plus one additive
contribution per feature, by several methods:

* one_at_a_time / leave_one_out: single-configuration diagnostics.
* sequential: telescoping along one activation order (order dependent).
* shapley_exact: order-free weighted sweep over all configurations.
* shapley_permutations: brute-force average over all n! orders (oracle).
* sampling_sequences / sampling_lifts: unbiased Monte Carlo estimators
  for large n, with convergence traces and deterministic seeding.

Evaluators range from CSV-backed tables to a synthetic portfolio
rebalance backtest.  Hot kernels run through numba when available; set
SHAPATTR_KERNELS=numpy to force the pure-numpy fallbacks.
"""

from .model import (
    AttributionError,
    AttributionResult,
    Configuration,
    DecompositionError,
    EnumerationLimitError,
    EvaluationError,
    FeatureAlreadyActiveError,
    InvalidPermutationError,
    MetricVector,
    MissingConfigurationError,
    PerformanceEvaluator,
    TableFormatError,
    ZeroReferenceError,
    enumerate_configurations,
    lift,
    validate_permutation,
)
from .tableio import format_table, parse_table
from .cache import CachedEvaluator, ensure_cached, evaluate_masks
from .baselines import leave_one_out, one_at_a_time, sequential
from .shapley import (
    shapley_by_permutations,
    shapley_exact,
    shapley_weights,
)
from .montecarlo import (
    ConvergenceTrace,
    SamplerConfig,
    TraceCheckpoint,
    relative_error,
    sample_lift_configuration,
    scale_trace,
    shapley_sampling_lifts,
    shapley_sampling_sequences,
)
from .evaluators import (
    AdditiveEvaluator,
    QuadraticEvaluator,
    RelabeledEvaluator,
    SumEvaluator,
    TableEvaluator,
)
from .synthetic import SingularCovarianceError, SyntheticRebalanceEvaluator
from .methods import METHOD_NAMES, canonical_method, is_stochastic, run_method
from .decomposition import (
    DecomposedAttribution,
    MetricDecomposition,
    attribute_decomposed,
    render_decomposition_csv,
)
from .convergence import ConvergenceStudy, run_convergence_study, trace_error_on_grid
from .report import ReportBundle, render_csv, render_json, render_text
from .jobs import JobSpec, JobError, load_job
from . import kernels

__version__ = "0.1.0"

__all__ = [
    "AdditiveEvaluator",
    "AttributionError",
    "AttributionResult",
    "CachedEvaluator",
    "Configuration",
    "ConvergenceStudy",
    "ConvergenceTrace",
    "DecomposedAttribution",
    "DecompositionError",
    "EnumerationLimitError",
    "EvaluationError",
    "FeatureAlreadyActiveError",
    "InvalidPermutationError",
    "JobError",
    "JobSpec",
    "METHOD_NAMES",
    "MetricDecomposition",
    "MetricVector",
    "MissingConfigurationError",
    "PerformanceEvaluator",
    "QuadraticEvaluator",
    "RelabeledEvaluator",
    "ReportBundle",
    "SamplerConfig",
    "SingularCovarianceError",
    "SumEvaluator",
    "SyntheticRebalanceEvaluator",
    "TableEvaluator",
    "TableFormatError",
    "TraceCheckpoint",
    "ZeroReferenceError",
    "attribute_decomposed",
    "canonical_method",
    "ensure_cached",
    "enumerate_configurations",
    "evaluate_masks",
    "format_table",
    "is_stochastic",
    "kernels",
    "leave_one_out",
    "lift",
    "load_job",
    "one_at_a_time",
    "parse_table",
    "relative_error",
    "render_csv",
    "render_decomposition_csv",
    "render_json",
    "render_text",
    "run_convergence_study",
    "run_method",
    "sample_lift_configuration",
    "scale_trace",
    "sequential",
    "shapley_by_permutations",
    "shapley_exact",
    "shapley_sampling_lifts",
    "shapley_sampling_sequences",
    "shapley_weights",
    "trace_error_on_grid",
    "__version__",
]
