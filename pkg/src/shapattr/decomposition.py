"""Attribution of decomposed metrics.

When a metric splits as f = f^1 + ... + f^k (return by country, pnl by
book), every linear attribution method commutes with the split: attributing
each component and summing equals attributing the total.  This module runs
one method across all components plus the total, checks the decomposition
actually adds up, and renders the combined report.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

from .cache import CachedEvaluator, ensure_cached
from .methods import run_method
from .model import (
    AttributionResult,
    DecompositionError,
    PerformanceEvaluator,
)
from .montecarlo import SamplerConfig
from .evaluators import SumEvaluator

__all__ = [
    "MetricDecomposition",
    "DecomposedAttribution",
    "attribute_decomposed",
    "render_decomposition_csv",
]

TOTAL_LABEL = "total"


@dataclass(frozen=True)
class MetricDecomposition:
    """Named component evaluators plus an optional explicit total.

    total None means the implied pointwise sum of the components.  All
    evaluators must agree on feature count and metric names.
    """

    components: tuple[tuple[str, PerformanceEvaluator], ...]
    total: PerformanceEvaluator | None = None

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("decomposition needs at least one component")
        names = [name for name, _ in self.components]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate component names in {names}")
        if TOTAL_LABEL in names:
            raise ValueError(f"component name {TOTAL_LABEL!r} is reserved")
        first = self.components[0][1]
        everyone = [e for _, e in self.components] + (
            [self.total] if self.total is not None else []
        )
        for e in everyone:
            if e.n_features != first.n_features:
                raise ValueError("evaluators disagree on feature count")
            if e.metric_names != first.metric_names:
                raise ValueError("evaluators disagree on metric names")


@dataclass(frozen=True)
class DecomposedAttribution:
    method: str
    feature_names: tuple[str, ...]
    metric_names: tuple[str, ...]
    component_results: tuple[tuple[str, tuple[AttributionResult, ...]], ...]
    total_results: tuple[AttributionResult, ...]


def _check_consistency(
    component_caches: Sequence[tuple[str, CachedEvaluator]],
    total_cache: CachedEvaluator,
    tolerance: float,
) -> None:
    """Spot-check sum(f^j(x)) == f(x) at every configuration all caches hold."""
    shared = set(total_cache.cached_masks())
    for _, c in component_caches:
        shared &= set(c.cached_masks())
    for mask in sorted(shared):
        total_vals = total_cache.peek(mask).values
        for q, metric in enumerate(total_cache.metric_names):
            parts = math.fsum(c.peek(mask).values[q] for _, c in component_caches)
            if abs(parts - total_vals[q]) > tolerance * max(1.0, abs(total_vals[q])):
                raise DecompositionError(
                    f"components sum to {parts!r} but total is {total_vals[q]!r} "
                    f"for metric {metric!r} at configuration mask {mask}"
                )


def attribute_decomposed(
    decomposition: MetricDecomposition,
    method: str,
    *,
    order: Sequence[int] | None = None,
    sampler: SamplerConfig | None = None,
    threads: int = 1,
    consistency_tolerance: float = 1e-9,
) -> DecomposedAttribution:
    """Attribute every component and the total with one method.

    The same options run everywhere; in particular sequential uses one
    common permutation across components (additivity fails otherwise, which
    is why the signature only accepts a single ``order``), and samplers
    reuse one seed so all components see identical draws.

    The implied total evaluates through the component caches, so each
    (component, configuration) backtest runs once no matter how many report
    rows it feeds.

    Raises:
        DecompositionError: component metrics do not sum to the total within
            ``consistency_tolerance`` (spot-checked at every configuration
            the method evaluated).
    """
    caches = [(name, ensure_cached(e)) for name, e in decomposition.components]
    if decomposition.total is None:
        total_cache = ensure_cached(SumEvaluator([c for _, c in caches]))
    else:
        total_cache = ensure_cached(decomposition.total)

    component_results = []
    for name, cache in caches:
        results = run_method(cache, method, order=order, sampler=sampler, threads=threads)
        component_results.append((name, tuple(results)))
    total_results = run_method(
        total_cache, method, order=order, sampler=sampler, threads=threads
    )
    _check_consistency(caches, total_cache, consistency_tolerance)
    return DecomposedAttribution(
        method=total_results[0].method,
        feature_names=total_cache.feature_names,
        metric_names=total_cache.metric_names,
        component_results=tuple(component_results),
        total_results=tuple(total_results),
    )


def render_decomposition_csv(result: DecomposedAttribution) -> str:
    """Rows (metric, method, component, baseline, a_1..a_n, unattributed),
    components in declaration order, then the total row; repr floats."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["metric", "method", "component", "baseline"]
        + list(result.feature_names)
        + ["unattributed"]
    )

    def row(metric: str, label: str, r: AttributionResult) -> list[str]:
        return (
            [metric, result.method, label, repr(r.baseline)]
            + [repr(a) for a in r.attributions]
            + [repr(r.residual)]
        )

    for q, metric in enumerate(result.metric_names):
        for name, results in result.component_results:
            writer.writerow(row(metric, name, results[q]))
        writer.writerow(row(metric, TOTAL_LABEL, result.total_results[q]))
    return out.getvalue()
