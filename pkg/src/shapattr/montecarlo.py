"""Monte Carlo Shapley estimators: sampling sequences and sampling lifts.

Sampling sequences draws feature permutations with replacement and averages
their sequential attributions; every prefix mean satisfies full attribution
because each sample does.  Sampling lifts draws, per feature, configurations
from the Shapley weight distribution and averages the observed lifts; this
is importance sampling of the exact weighted sum, so it concentrates effort
on the high-weight edges, at the price of only approximate full attribution
(optionally restored by rescaling).

Determinism: every drawn sample is generated up front from numpy substreams
keyed on (seed, stream, feature), before any evaluation happens, and the
estimate is reduced in fixed sample order.  Thread count and kernel backend
therefore never change results.  Progress is measured in logical unique
evaluations: the number of distinct configurations the estimator has
requested so far, in sample order, regardless of cache pre-warming.

Saturation: once the estimator has requested all 2^n configurations, more
samples carry no new information; both estimators then replace the sample
averages with the exact weighted sweep over the now-complete table (the
averaging weights replaced by their expectations) and stop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cache import CachedEvaluator, ensure_cached, evaluate_masks
from .model import (
    AttributionResult,
    Configuration,
    PerformanceEvaluator,
    ZeroReferenceError,
    build_attribution_results,
)
from .shapley import exact_from_dense

__all__ = [
    "SamplerConfig",
    "LiftSample",
    "TraceCheckpoint",
    "ConvergenceTrace",
    "relative_error",
    "sample_lift_masks",
    "sample_lift_configuration",
    "shapley_sampling_sequences",
    "shapley_sampling_lifts",
    "scale_trace",
]

# Substream tags so the two estimators never share draws for one master seed.
_STREAM_SEQUENCES = 1
_STREAM_LIFTS = 2

# Masks are manipulated as numpy int64; bit n-1 must stay in range.
_SAMPLER_MAX_FEATURES = 62

# |sum(a)| below this (relative to |f(1)-b|) makes the scale factor meaningless.
SCALING_DEGENERACY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SamplerConfig:
    """Settings shared by both estimators.

    budget: permutations for sequences; lifts per feature for lifts.
    trace_every: checkpoint interval, in unique evaluations.
    scale_to_full_attribution: lifts only; rescale a by (f(1)-b)/sum(a).
    """

    budget: int
    seed: int
    scale_to_full_attribution: bool = False
    trace_every: int = 1

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if self.trace_every < 1:
            raise ValueError(f"trace_every must be >= 1, got {self.trace_every}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")


@dataclass(frozen=True)
class LiftSample:
    """One Monte Carlo draw for the lifts estimator: feature i, a
    configuration x with x_i = 0, and the observed per-metric lift."""

    feature: int
    x: Configuration
    lift: tuple[float, ...]


@dataclass(frozen=True)
class TraceCheckpoint:
    unique_evaluations: int
    estimate: tuple[float, ...]
    relative_error: float | None = None


@dataclass(frozen=True)
class ConvergenceTrace:
    """Estimate snapshots at increasing unique-evaluation counts, one metric."""

    method: str
    metric: str
    checkpoints: tuple[TraceCheckpoint, ...]

    def to_csv(self) -> str:
        """Columns (unique_evals, relative_error); error cell empty if no
        reference was supplied."""
        lines = ["unique_evals,relative_error"]
        for cp in self.checkpoints:
            err = "" if cp.relative_error is None else repr(cp.relative_error)
            lines.append(f"{cp.unique_evaluations},{err}")
        return "\n".join(lines) + "\n"


def relative_error(estimate, reference) -> float:
    """2-norm relative error ||est - ref|| / ||ref||.

    Raises:
        ZeroReferenceError: the reference vector has zero norm.
    """
    est = np.asarray(estimate, dtype=np.float64).ravel()
    ref = np.asarray(reference, dtype=np.float64).ravel()
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {ref.shape}")
    denom = float(np.linalg.norm(ref))
    if denom == 0.0:
        raise ZeroReferenceError("reference attribution vector has zero norm")
    return float(np.linalg.norm(est - ref)) / denom


def sample_lift_masks(
    n: int, i: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``count`` masks from X_i under the Shapley weight distribution.

    Draw the active count k uniformly on {0,...,n-1}, then a uniform
    k-subset of the n-1 features other than i.  There are C(n-1,k) such
    subsets, so each configuration x with k active features has probability
    (1/n)*(1/C(n-1,k)) = k!(n-1-k)!/n!, exactly the Shapley lift weight.

    Returns:
        int64 masks, bit i clear in every entry.
    """
    if not 0 <= i < n:
        raise IndexError(f"feature index {i} out of range for n={n}")
    if n > _SAMPLER_MAX_FEATURES:
        raise ValueError(f"samplers support n <= {_SAMPLER_MAX_FEATURES}")
    if n == 1:
        return np.zeros(count, dtype=np.int64)
    k = rng.integers(0, n, size=count)
    others = np.array([f for f in range(n) if f != i], dtype=np.int64)
    order = np.argsort(rng.random((count, n - 1)), axis=1)
    ranks = np.empty_like(order)
    np.put_along_axis(
        ranks, order, np.broadcast_to(np.arange(n - 1), (count, n - 1)), axis=1
    )
    chosen = ranks < k[:, None]
    return chosen.astype(np.int64) @ (np.int64(1) << others)


def sample_lift_configuration(
    n: int, i: int, rng: np.random.Generator
) -> Configuration:
    """One draw from the lift-sampling distribution (see sample_lift_masks)."""
    return Configuration(n, int(sample_lift_masks(n, i, 1, rng)[0]))


def _reference_matrix(reference, n: int, m: int) -> np.ndarray | None:
    if reference is None:
        return None
    ref = np.asarray(reference, dtype=np.float64)
    if ref.ndim == 1:
        ref = ref.reshape(1, -1)
    if ref.shape != (m, n):
        raise ValueError(f"reference must be ({m}, {n}), got {ref.shape}")
    return ref


def _checkpoint_rows(
    u_after: np.ndarray, last: int, first_eligible: int, trace_every: int
) -> list[int]:
    """Sample indices to checkpoint: the first eligible index at which the
    unique count reaches each multiple of trace_every, plus the final index.
    One checkpoint per unique count (the latest index wins), so counts are
    strictly increasing across checkpoints."""
    u_final = int(u_after[last])
    marks = np.arange(trace_every, u_final + 1, trace_every)
    rows = np.searchsorted(u_after[: last + 1], marks, side="left")
    rows = np.clip(rows, first_eligible, last)
    rows = np.unique(np.append(rows, last))
    by_count: dict[int, int] = {}
    for r in rows:
        by_count[int(u_after[r])] = int(r)  # later rows overwrite
    return [by_count[u] for u in sorted(by_count)]


def _stream_accounting(stream: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(distinct_sorted, cumulative_unique_after_each_position) for a mask
    request stream."""
    distinct_sorted, first_pos = np.unique(stream, return_index=True)
    is_new = np.zeros(stream.shape[0], dtype=np.int64)
    is_new[first_pos] = 1
    return distinct_sorted, np.cumsum(is_new)


def _evaluate_stream(
    cache: CachedEvaluator, stream: np.ndarray, distinct_sorted: np.ndarray, threads: int
) -> np.ndarray:
    """Evaluate all masks of the stream (first-appearance order) and return
    the value table aligned with distinct_sorted."""
    _, first_idx = np.unique(stream, return_index=True)
    ordered = stream[np.sort(first_idx)]
    evaluate_masks(cache, [int(v) for v in ordered], threads)
    return cache.values_array([int(v) for v in distinct_sorted])


def shapley_sampling_sequences(
    evaluator: PerformanceEvaluator,
    config: SamplerConfig,
    *,
    reference=None,
    threads: int = 1,
) -> tuple[list[AttributionResult], list[ConvergenceTrace]]:
    """Estimate Shapley attributions by averaging sampled permutation paths.

    Args:
        config: budget = number of permutations (drawn with replacement).
        reference: optional (n_metrics, n) exact attributions; enables
            relative_error in the traces.
        threads: evaluation fan-out; never affects results.

    Returns:
        (results, traces), one of each per metric.  There is no estimate
        until one entire sequence has been evaluated, so the first
        checkpoint lands at or after n+1 unique evaluations.
    """
    if config.scale_to_full_attribution:
        raise ValueError("scaling applies to sampling lifts only")
    cache = ensure_cached(evaluator)
    n, m = cache.n_features, len(cache.metric_names)
    if n > _SAMPLER_MAX_FEATURES:
        raise ValueError(f"samplers support n <= {_SAMPLER_MAX_FEATURES}")
    size = 1 << n
    budget = config.budget

    rng = np.random.default_rng(
        np.random.SeedSequence((config.seed, _STREAM_SEQUENCES))
    )
    perms = rng.permuted(np.tile(np.arange(n, dtype=np.int64), (budget, 1)), axis=1)
    bits = (np.int64(1) << perms).astype(np.int64)
    paths = np.concatenate(
        [np.zeros((budget, 1), dtype=np.int64), np.cumsum(bits, axis=1)], axis=1
    )  # (budget, n+1); bits along a permutation are disjoint so cumsum == OR

    stream = paths.reshape(-1)
    distinct_sorted, u_cum = _stream_accounting(stream)
    values = _evaluate_stream(cache, stream, distinct_sorted, threads)
    u_after = u_cum.reshape(budget, n + 1)[:, -1]  # after each completed path

    path_vals = values[np.searchsorted(distinct_sorted, paths)]  # (budget, n+1, m)
    lifts = np.diff(path_vals, axis=1)  # (budget, n, m); step j -> feature perms[:, j]
    contrib = np.empty_like(lifts)
    np.put_along_axis(contrib, perms[:, :, None], lifts, axis=1)
    cum = np.cumsum(contrib, axis=0)  # (budget, n, m)

    saturated = np.nonzero(u_after == size)[0]
    last = int(saturated[0]) if saturated.size else budget - 1
    exact = exact_from_dense(cache.dense_values(), n) if saturated.size else None

    baseline = values[np.searchsorted(distinct_sorted, 0)]
    full_vals = values[np.searchsorted(distinct_sorted, size - 1)]
    ref = _reference_matrix(reference, n, m)

    rows = _checkpoint_rows(u_after, last, 0, config.trace_every)
    final_a = exact if exact is not None else cum[last] / float(last + 1)

    traces = []
    for q, metric in enumerate(cache.metric_names):
        cps = []
        for r in rows:
            if exact is not None and r == last:
                est = exact[:, q]
            else:
                est = cum[r, :, q] / float(r + 1)
            err = relative_error(est, ref[q]) if ref is not None else None
            cps.append(
                TraceCheckpoint(int(u_after[r]), tuple(float(v) for v in est), err)
            )
        traces.append(ConvergenceTrace("sampling_sequences", metric, tuple(cps)))

    results = build_attribution_results(
        "sampling_sequences",
        cache.metric_names,
        baseline,
        final_a.T,
        full_vals,
        unique_evaluations=int(u_after[last]),
        seed=config.seed,
    )
    return results, traces


def shapley_sampling_lifts(
    evaluator: PerformanceEvaluator,
    config: SamplerConfig,
    *,
    reference=None,
    threads: int = 1,
) -> tuple[list[AttributionResult], list[ConvergenceTrace]]:
    """Estimate each a_i as the mean of lifts drawn from the Shapley weights.

    Args:
        config: budget = lifts per feature (equal split); draws interleave
            round-robin across features, so after one round every feature
            has an estimate.  With scale_to_full_attribution the final
            estimate is rescaled per metric by (f(1)-b)/sum(a); a sum too
            close to zero sets scaling_degenerate and skips the rescale.
        reference: optional (n_metrics, n) exact attributions for trace errors.

    Returns:
        (results, traces), one per metric.  Traces report the scaled
        estimate when scaling is requested.
    """
    cache = ensure_cached(evaluator)
    n, m = cache.n_features, len(cache.metric_names)
    if n > _SAMPLER_MAX_FEATURES:
        raise ValueError(f"samplers support n <= {_SAMPLER_MAX_FEATURES}")
    size = 1 << n
    budget = config.budget
    total = n * budget
    full_mask = size - 1

    masks_by_feature = np.empty((n, budget), dtype=np.int64)
    for i in range(n):
        rng_i = np.random.default_rng(
            np.random.SeedSequence((config.seed, _STREAM_LIFTS, i))
        )
        masks_by_feature[i] = sample_lift_masks(n, i, budget, rng_i)

    draws = np.arange(total)
    feat = (draws % n).astype(np.int64)
    x = masks_by_feature[feat, draws // n]
    y = x | (np.int64(1) << feat)

    # Logical request order: f(0), f(1) for the baseline/full value, then
    # per draw its off-configuration and on-configuration.
    stream = np.empty(2 + 2 * total, dtype=np.int64)
    stream[0] = 0
    stream[1] = full_mask
    stream[2::2] = x
    stream[3::2] = y
    distinct_sorted, u_cum = _stream_accounting(stream)
    values = _evaluate_stream(cache, stream, distinct_sorted, threads)
    u_after = u_cum[3::2]  # after each completed draw

    lifts = (
        values[np.searchsorted(distinct_sorted, y)]
        - values[np.searchsorted(distinct_sorted, x)]
    )  # (total, m)
    cs = np.cumsum(lifts.reshape(budget, n, m), axis=0)  # sums after each round

    saturated = np.nonzero(u_after == size)[0]
    last = int(saturated[0]) if saturated.size else total - 1
    exact = exact_from_dense(cache.dense_values(), n) if saturated.size else None

    baseline = values[np.searchsorted(distinct_sorted, 0)]
    full_vals = values[np.searchsorted(distinct_sorted, full_mask)]
    ref = _reference_matrix(reference, n, m)

    def mean_estimate(d: int) -> np.ndarray:
        counts = (d - np.arange(n)) // n + 1  # draws of each feature so far
        rows = counts - 1
        est = cs[rows, np.arange(n)] / counts[:, None]
        return est  # (n, m)

    rows = _checkpoint_rows(u_after, last, n - 1, config.trace_every)
    final_a = exact if exact is not None else mean_estimate(last)

    scale_requested = config.scale_to_full_attribution
    degenerate = [False] * m

    def scaled(est: np.ndarray, q: int) -> tuple[np.ndarray, bool]:
        """Rescale one metric column to full attribution; returns (a, degenerate)."""
        gap = full_vals[q] - baseline[q]
        total_a = float(est.sum())
        if abs(total_a) < SCALING_DEGENERACY_TOLERANCE * max(1.0, abs(gap)):
            return est, True
        return est * (gap / total_a), False

    traces = []
    for q, metric in enumerate(cache.metric_names):
        cps = []
        for r in rows:
            if exact is not None and r == last:
                est = exact[:, q]
            else:
                est = mean_estimate(r)[:, q]
            if scale_requested:
                est, _ = scaled(est, q)
            err = relative_error(est, ref[q]) if ref is not None else None
            cps.append(
                TraceCheckpoint(int(u_after[r]), tuple(float(v) for v in est), err)
            )
        name = "sampling_lifts_scaled" if scale_requested else "sampling_lifts"
        traces.append(ConvergenceTrace(name, metric, tuple(cps)))

    a_final = np.array(final_a, dtype=np.float64)
    if scale_requested:
        for q in range(m):
            a_final[:, q], degenerate[q] = scaled(a_final[:, q], q)

    results = build_attribution_results(
        "sampling_lifts",
        cache.metric_names,
        baseline,
        a_final.T,
        full_vals,
        unique_evaluations=int(u_after[last]),
        seed=config.seed,
        scaled=scale_requested,
        scaling_degenerate=degenerate,
    )
    return results, traces


def scale_trace(
    trace: ConvergenceTrace,
    baseline: float,
    full_value: float,
    reference=None,
) -> ConvergenceTrace:
    """Derive the scaled-lifts trace from an unscaled one.

    The scaled estimate at a checkpoint is a pure function of the unscaled
    estimate and (baseline, full value), so the scaled variant costs no
    extra sampling.  Checkpoints whose attribution sum is degenerate keep
    the unscaled estimate.
    """
    gap = full_value - baseline
    cps = []
    for cp in trace.checkpoints:
        est = np.asarray(cp.estimate, dtype=np.float64)
        total_a = float(est.sum())
        if abs(total_a) >= SCALING_DEGENERACY_TOLERANCE * max(1.0, abs(gap)):
            est = est * (gap / total_a)
        err = relative_error(est, reference) if reference is not None else None
        cps.append(
            TraceCheckpoint(cp.unique_evaluations, tuple(float(v) for v in est), err)
        )
    return ConvergenceTrace("sampling_lifts_scaled", trace.metric, tuple(cps))
