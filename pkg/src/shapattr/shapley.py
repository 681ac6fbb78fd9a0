"""Exact Shapley attribution and the factorial permutation oracle.

The Shapley attribution of feature i is the weighted average of its lifts
over every configuration not containing it:

    a_i = sum over x in X_i of w(x) * (f(x + e_i) - f(x)),
    w(x) = k!(n-k-1)!/n! = 1/(n*C(n-1,k)),  k = number of active features.

Equivalently it is the average of the permuted sequential attributions over
all n! feature orders; :func:`shapley_by_permutations` computes that average
literally and serves as the ground-truth oracle for the weighted form.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import kernels
from .cache import ensure_cached, evaluate_masks
from .model import (
    AttributionResult,
    DEFAULT_ENUMERATION_LIMIT,
    EnumerationLimitError,
    PerformanceEvaluator,
    build_attribution_results,
)

__all__ = ["shapley_weights", "shapley_exact", "shapley_by_permutations"]

DEFAULT_FACTORIAL_LIMIT = 8


def shapley_weights(n: int) -> np.ndarray:
    """Lift weights by active-feature count, padded to length n+1.

    weights[k] = 1/(n*C(n-1,k)) for k < n; weights[n] = 0 (a configuration
    with all features on has no lifts).  The binomials are built by
    incremental multiplication, exact in floats for n <= 20 and
    overflow-free for any allowed n.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    weights = np.zeros(n + 1, dtype=np.float64)
    binom = 1.0  # C(n-1, 0)
    for k in range(n):
        weights[k] = 1.0 / (n * binom)
        binom = binom * (n - 1 - k) / (k + 1)
    return weights


def _dense_values(cache, threads: int) -> np.ndarray:
    size = 1 << cache.n_features
    evaluate_masks(cache, range(size), threads)
    return cache.dense_values()


def exact_from_dense(values: np.ndarray, n: int) -> np.ndarray:
    """(n, m) Shapley attributions from a full (2^n, m) value table."""
    return kernels.shapley_sweep(values, shapley_weights(n), kernels.popcounts(n), n)


def shapley_exact(
    evaluator: PerformanceEvaluator,
    *,
    enumeration_limit: int = DEFAULT_ENUMERATION_LIMIT,
    threads: int = 1,
) -> list[AttributionResult]:
    """Exact Shapley attribution via one weighted sweep over all 2^n configurations.

    All n per-feature sums accumulate in a single pass over the table
    (n*2^(n-1) lift terms).  Costs exactly 2^n distinct evaluations.

    Raises:
        EnumerationLimitError: n exceeds ``enumeration_limit``.
    """
    cache = ensure_cached(evaluator)
    n = cache.n_features
    if n > enumeration_limit:
        raise EnumerationLimitError(
            f"exact Shapley needs 2^{n} evaluations (limit n <= {enumeration_limit})"
        )
    values = _dense_values(cache, threads)
    a = exact_from_dense(values, n)  # (n, m)
    return build_attribution_results(
        "shapley_exact",
        cache.metric_names,
        values[0],
        a.T,
        values[-1],
        unique_evaluations=1 << n,
    )


def shapley_by_permutations(
    evaluator: PerformanceEvaluator,
    *,
    factorial_limit: int = DEFAULT_FACTORIAL_LIMIT,
    threads: int = 1,
) -> list[AttributionResult]:
    """Ground-truth oracle: average the sequential attribution over all n! orders.

    Enumerates permutations literally and walks every path; costs 2^n
    distinct evaluations (paths share prefixes through the cache) but
    n!*n lift accumulations, so n is capped.

    Raises:
        EnumerationLimitError: n exceeds ``factorial_limit``.
    """
    cache = ensure_cached(evaluator)
    n = cache.n_features
    if n > factorial_limit:
        raise EnumerationLimitError(
            f"permutation oracle needs {n}! paths (limit n <= {factorial_limit})"
        )
    values = _dense_values(cache, threads)
    perms = np.array(
        list(itertools.permutations(range(n))), dtype=np.int64
    ).reshape(-1, n)
    sums = kernels.permutation_walk(values, perms)
    a = sums / float(math.factorial(n))
    return build_attribution_results(
        "shapley_permutations",
        cache.metric_names,
        values[0],
        a.T,
        values[-1],
        unique_evaluations=1 << n,
    )
