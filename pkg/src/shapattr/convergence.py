"""Multi-seed convergence study: estimator error versus unique evaluations.

Runs both Monte Carlo estimators against the exact Shapley reference for a
batch of sampler seeds, aligns every trace on a common unique-evaluation
grid (step interpolation: a trace's error at grid point g is its last
checkpoint at or below g), and averages across seeds.  The scaled-lifts
variant is derived from the unscaled run, so it adds no evaluations.

All runs share one evaluation cache: logical unique-evaluation accounting
lives in the samplers, so pre-warmed values change nothing but wall time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cache import ensure_cached
from .model import PerformanceEvaluator
from .montecarlo import (
    ConvergenceTrace,
    SamplerConfig,
    scale_trace,
    shapley_sampling_lifts,
    shapley_sampling_sequences,
)
from .shapley import shapley_exact

__all__ = ["ESTIMATORS", "ConvergenceStudy", "trace_error_on_grid", "run_convergence_study"]

ESTIMATORS = ("sampling_sequences", "sampling_lifts", "sampling_lifts_scaled")


@dataclass(frozen=True)
class ConvergenceStudy:
    """Aggregated study output.

    mean_errors maps estimator name to an (n_metrics, len(grid)) array of
    across-seed mean relative errors; a cell is NaN until every seed's trace
    has an estimate at that grid point.  traces maps estimator name to the
    raw per-seed, per-metric traces.
    """

    metric_names: tuple[str, ...]
    seeds: tuple[int, ...]
    grid: np.ndarray
    mean_errors: dict[str, np.ndarray]
    traces: dict[str, tuple[tuple[ConvergenceTrace, ...], ...]]
    reference: np.ndarray

    def saturated(self, estimator: str) -> bool:
        """True when every seed's final checkpoint covers all configurations."""
        size = self.grid[-1]
        return all(
            per_metric[0].checkpoints[-1].unique_evaluations == size
            for per_metric in self.traces[estimator]
        )


def trace_error_on_grid(trace: ConvergenceTrace, grid: np.ndarray) -> np.ndarray:
    """Step-interpolated relative error at each grid point (NaN before the
    first checkpoint).  The trace must carry relative errors."""
    errors = np.full(len(grid), np.nan)
    us = np.array([cp.unique_evaluations for cp in trace.checkpoints])
    es = np.array(
        [np.nan if cp.relative_error is None else cp.relative_error for cp in trace.checkpoints]
    )
    idx = np.searchsorted(us, grid, side="right") - 1
    valid = idx >= 0
    errors[valid] = es[idx[valid]]
    return errors


def run_convergence_study(
    evaluator: PerformanceEvaluator,
    *,
    seeds,
    budget_sequences: int,
    budget_lifts: int,
    trace_every: int,
    threads: int = 1,
) -> ConvergenceStudy:
    """Run the full study.  ``budget_lifts`` is per feature.

    Raises:
        EnumerationLimitError: n too large for the exact reference.
    """
    cache = ensure_cached(evaluator)
    n, m = cache.n_features, len(cache.metric_names)
    size = 1 << n
    exact = shapley_exact(cache, threads=threads)
    reference = np.array([r.attributions for r in exact])  # (m, n)
    baseline = np.array([r.baseline for r in exact])
    full_value = np.array([r.full_value for r in exact])

    seeds = tuple(int(s) for s in seeds)
    grid = np.arange(trace_every, size + 1, trace_every)
    all_traces: dict[str, list[tuple[ConvergenceTrace, ...]]] = {k: [] for k in ESTIMATORS}
    for seed in seeds:
        _, tr_seq = shapley_sampling_sequences(
            cache,
            SamplerConfig(budget=budget_sequences, seed=seed, trace_every=trace_every),
            reference=reference,
            threads=threads,
        )
        _, tr_lift = shapley_sampling_lifts(
            cache,
            SamplerConfig(budget=budget_lifts, seed=seed, trace_every=trace_every),
            reference=reference,
            threads=threads,
        )
        tr_scaled = tuple(
            scale_trace(tr_lift[q], baseline[q], full_value[q], reference[q])
            for q in range(m)
        )
        all_traces["sampling_sequences"].append(tuple(tr_seq))
        all_traces["sampling_lifts"].append(tuple(tr_lift))
        all_traces["sampling_lifts_scaled"].append(tr_scaled)

    mean_errors = {}
    for key, per_seed in all_traces.items():
        errs = np.empty((m, len(seeds), len(grid)))
        for s, per_metric in enumerate(per_seed):
            for q in range(m):
                errs[q, s] = trace_error_on_grid(per_metric[q], grid)
        means = np.full((m, len(grid)), np.nan)
        defined = ~np.isnan(errs).any(axis=1)  # (m, grid): every seed has an estimate
        for q in range(m):
            sel = defined[q]
            means[q, sel] = errs[q][:, sel].mean(axis=0)
        mean_errors[key] = means

    return ConvergenceStudy(
        metric_names=cache.metric_names,
        seeds=seeds,
        grid=grid,
        mean_errors=mean_errors,
        traces={k: tuple(v) for k, v in all_traces.items()},
        reference=reference,
    )
