"""Classical attribution methods: one-at-a-time, leave-one-out, sequential.

Permuted sequential attribution is :func:`sequential` with a non-identity
order.  All methods report b = f(0) and the residual f(1) - sum(a) - b;
only sequential guarantees a zero residual (telescoping).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .cache import ensure_cached, evaluate_masks
from .model import (
    AttributionResult,
    PerformanceEvaluator,
    build_attribution_results,
    validate_permutation,
)

__all__ = ["one_at_a_time", "leave_one_out", "sequential"]


def one_at_a_time(
    evaluator: PerformanceEvaluator, *, threads: int = 1
) -> list[AttributionResult]:
    """a_i = f(e_i) - f(0): each feature alone against the empty configuration.

    Costs n+2 distinct evaluations ({0}, the n singletons, and 1 for the
    reported full value / residual).

    Returns:
        One result per metric, in evaluator metric order.
    """
    cache = ensure_cached(evaluator)
    n = cache.n_features
    full = (1 << n) - 1
    masks = [0] + [1 << i for i in range(n)] + [full]
    evaluate_masks(cache, masks, threads)
    base = cache.values_array([0])[0]
    singles = cache.values_array([1 << i for i in range(n)])
    a = singles - base  # (n, m)
    return build_attribution_results(
        "one_at_a_time",
        cache.metric_names,
        base,
        a.T,
        cache.values_array([full])[0],
        unique_evaluations=len(set(masks)),
    )


def leave_one_out(
    evaluator: PerformanceEvaluator, *, threads: int = 1
) -> list[AttributionResult]:
    """a_i = f(1) - f(1 - e_i): loss from removing each feature from the full set.

    Costs n+2 distinct evaluations (0, 1, and the n leave-outs); f(0) is
    evaluated solely to report the baseline.
    """
    cache = ensure_cached(evaluator)
    n = cache.n_features
    full = (1 << n) - 1
    drops = [full & ~(1 << i) for i in range(n)]
    masks = [0, full] + drops
    evaluate_masks(cache, masks, threads)
    full_vals = cache.values_array([full])[0]
    a = full_vals - cache.values_array(drops)  # (n, m)
    return build_attribution_results(
        "leave_one_out",
        cache.metric_names,
        cache.values_array([0])[0],
        a.T,
        full_vals,
        unique_evaluations=len(set(masks)),
    )


def sequential(
    evaluator: PerformanceEvaluator,
    order: Sequence[int] | None = None,
    *,
    threads: int = 1,
) -> list[AttributionResult]:
    """Credit each feature with its marginal lift when added in ``order``.

    a_{k_j} = f(e_{k_1}+...+e_{k_j}) - f(e_{k_1}+...+e_{k_{j-1}}).  The sum
    telescopes, so full attribution holds for every permutation.  Costs n+1
    distinct evaluations (the prefixes, from 0 to 1).

    Args:
        order: 0-based feature order; None means identity (plain sequential
            attribution).  Removing features off the top in reverse order
            yields the same attribution, so no separate operation exists.

    Raises:
        InvalidPermutationError: order is not a permutation of 0..n-1.
    """
    cache = ensure_cached(evaluator)
    n = cache.n_features
    perm = validate_permutation(order if order is not None else range(n), n)
    prefixes = [0]
    for i in perm:
        prefixes.append(prefixes[-1] | (1 << i))
    evaluate_masks(cache, prefixes, threads)
    values = cache.values_array(prefixes)  # (n+1, m)
    steps = np.diff(values, axis=0)  # (n, m), step j belongs to feature perm[j]
    a = np.empty_like(steps)
    a[list(perm)] = steps
    return build_attribution_results(
        "sequential",
        cache.metric_names,
        values[0],
        a.T,
        values[-1],
        unique_evaluations=len(set(prefixes)),
    )
