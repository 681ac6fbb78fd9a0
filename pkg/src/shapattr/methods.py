"""Name-based dispatch over all attribution methods (CLI, decomposition)."""

from __future__ import annotations

from typing import Sequence

from .baselines import leave_one_out, one_at_a_time, sequential
from .model import AttributionResult, PerformanceEvaluator
from .montecarlo import (
    SamplerConfig,
    shapley_sampling_lifts,
    shapley_sampling_sequences,
)
from .shapley import shapley_by_permutations, shapley_exact

__all__ = ["METHOD_NAMES", "canonical_method", "is_stochastic", "run_method"]

METHOD_NAMES = (
    "one_at_a_time",
    "leave_one_out",
    "sequential",
    "shapley_exact",
    "shapley_permutations",
    "sampling_sequences",
    "sampling_lifts",
)

_ALIASES = {
    "oaat": "one_at_a_time",
    "loo": "leave_one_out",
    "shapley": "shapley_exact",
    "permutations": "shapley_permutations",
    "sequences": "sampling_sequences",
    "lifts": "sampling_lifts",
}

_STOCHASTIC = {"sampling_sequences", "sampling_lifts"}


def canonical_method(name: str) -> str:
    """Resolve aliases; raises ValueError for unknown names."""
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in METHOD_NAMES:
        raise ValueError(f"unknown method {name!r}; known: {', '.join(METHOD_NAMES)}")
    return key


def is_stochastic(name: str) -> bool:
    return canonical_method(name) in _STOCHASTIC


def run_method(
    evaluator: PerformanceEvaluator,
    name: str,
    *,
    order: Sequence[int] | None = None,
    sampler: SamplerConfig | None = None,
    threads: int = 1,
) -> list[AttributionResult]:
    """Run one attribution method by name.

    Args:
        order: 0-based permutation, sequential only.
        sampler: required for the two sampling methods, ignored otherwise.
    """
    method = canonical_method(name)
    if order is not None and method != "sequential":
        raise ValueError(f"order applies to sequential, not {method}")
    if method == "one_at_a_time":
        return one_at_a_time(evaluator, threads=threads)
    if method == "leave_one_out":
        return leave_one_out(evaluator, threads=threads)
    if method == "sequential":
        return sequential(evaluator, order, threads=threads)
    if method == "shapley_exact":
        return shapley_exact(evaluator, threads=threads)
    if method == "shapley_permutations":
        return shapley_by_permutations(evaluator, threads=threads)
    if sampler is None:
        raise ValueError(f"{method} needs a SamplerConfig (budget and seed)")
    if method == "sampling_sequences":
        results, _ = shapley_sampling_sequences(evaluator, sampler, threads=threads)
    else:
        results, _ = shapley_sampling_lifts(evaluator, sampler, threads=threads)
    return results
