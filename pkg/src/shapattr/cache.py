"""Deduplicating evaluation cache and parallel evaluation plumbing.

Attribution methods re-request the same configurations constantly (every
permutation path shares prefixes), and real evaluators are backtests that
cost seconds.  Wrapping an evaluator in :class:`CachedEvaluator` makes each
distinct configuration cost one inner evaluation no matter how many methods
run against it, and makes the whole stack safe to drive from a thread pool.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Mapping

import numpy as np

from . import tableio
from .model import Configuration, MetricVector, PerformanceEvaluator

__all__ = ["CachedEvaluator", "ensure_cached", "evaluate_masks"]


class CachedEvaluator(PerformanceEvaluator):
    """Thread-safe memoizing wrapper around another evaluator.

    Counters:
        unique_count: distinct configurations computed by the inner
            evaluator (preloaded rows are not counted; they never reach it).
        hit_count: requests served from the store.  Under concurrent misses
            of the same configuration both threads may call the inner
            evaluator; the store keeps the first result, the duplicate is
            discarded and not counted as a hit, so hit_count is only
            approximate under races.  unique_count stays exact.

    Failed inner calls are never cached; the exception propagates and a
    later request retries.
    """

    supports_concurrent_evaluate = True

    def __init__(
        self,
        inner: PerformanceEvaluator,
        preload: Mapping[int, MetricVector] | None = None,
    ) -> None:
        self._inner = inner
        self._store: dict[int, MetricVector] = {}
        self._lock = threading.Lock()
        # Serializes inner calls for evaluators that are not thread-safe.
        self._inner_lock = None if inner.supports_concurrent_evaluate else threading.Lock()
        self._unique = 0
        self._hits = 0
        if preload:
            for mask, vec in preload.items():
                if vec.names != inner.metric_names:
                    raise ValueError(
                        f"preloaded metrics {vec.names} do not match evaluator {inner.metric_names}"
                    )
                Configuration(inner.n_features, mask)  # range check
                self._store[mask] = vec

    @property
    def inner(self) -> PerformanceEvaluator:
        return self._inner

    @property
    def n_features(self) -> int:
        return self._inner.n_features

    @property
    def metric_names(self) -> tuple[str, ...]:
        return self._inner.metric_names

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self._inner.feature_names

    @property
    def unique_count(self) -> int:
        return self._unique

    @property
    def hit_count(self) -> int:
        return self._hits

    def snapshot_counters(self) -> tuple[int, int]:
        """(unique_count, hit_count) read atomically."""
        with self._lock:
            return self._unique, self._hits

    def __len__(self) -> int:
        return len(self._store)

    def cached_masks(self) -> list[int]:
        with self._lock:
            return sorted(self._store)

    def peek(self, mask: int) -> MetricVector | None:
        """Stored value for a mask, or None; never triggers evaluation."""
        return self._store.get(mask)

    def evaluate(self, config: Configuration) -> MetricVector:
        self._check_config(config)
        mask = config.mask
        with self._lock:
            found = self._store.get(mask)
            if found is not None:
                self._hits += 1
                return found
        if self._inner_lock is not None:
            with self._inner_lock:
                found = self._store.get(mask)
                if found is not None:
                    return found  # filled while we waited on the inner lock
                value = self._inner.evaluate(config)
        else:
            value = self._inner.evaluate(config)
        with self._lock:
            found = self._store.get(mask)
            if found is not None:
                return found  # lost an insert race; keep the first result
            self._store[mask] = value
            self._unique += 1
            return value

    # -- bulk views ------------------------------------------------------

    def values_array(self, masks: Iterable[int]) -> np.ndarray:
        """Stored metric values as a (len(masks), n_metrics) float array.

        All masks must already be cached.
        """
        rows = []
        for mask in masks:
            vec = self._store.get(mask)
            if vec is None:
                raise KeyError(f"mask {mask} not cached")
            rows.append(vec.values)
        return np.array(rows, dtype=np.float64)

    def dense_values(self) -> np.ndarray:
        """(2^n, n_metrics) array over all configurations; requires full coverage."""
        return self.values_array(range(1 << self.n_features))

    # -- persistence -----------------------------------------------------

    def export_csv(self) -> str:
        """Cached rows in the canonical table format (mask order, repr floats)."""
        with self._lock:
            rows = {mask: vec.values for mask, vec in self._store.items()}
        return tableio.format_table(self.n_features, self.metric_names, rows)

    @classmethod
    def from_csv(cls, inner: PerformanceEvaluator, text: str) -> "CachedEvaluator":
        """Wrap ``inner`` with rows imported from table CSV.

        Imported rows satisfy requests without touching the inner evaluator
        and without incrementing unique_count.
        """
        n, metric_names, rows = tableio.parse_table(text)
        if n != inner.n_features:
            raise ValueError(
                f"table has {n} features, evaluator expects {inner.n_features}"
            )
        if metric_names != inner.metric_names:
            raise ValueError(
                f"table metrics {metric_names} do not match evaluator {inner.metric_names}"
            )
        preload = {
            mask: MetricVector(values, metric_names) for mask, values in rows.items()
        }
        return cls(inner, preload=preload)


def ensure_cached(evaluator: PerformanceEvaluator) -> CachedEvaluator:
    """Wrap in a cache unless it already is one."""
    if isinstance(evaluator, CachedEvaluator):
        return evaluator
    return CachedEvaluator(evaluator)


def evaluate_masks(
    cache: CachedEvaluator, masks: Iterable[int], threads: int = 1
) -> None:
    """Ensure every mask is cached, optionally fanning out over threads.

    Thread workers only help when the inner evaluator releases the GIL
    (numpy-heavy backtests do).  Results land in the cache; order of
    completion does not matter because reads go through the store.
    """
    distinct = list(dict.fromkeys(masks))
    n = cache.n_features
    if threads <= 1:
        for mask in distinct:
            cache.evaluate(Configuration(n, mask))
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(lambda m: cache.evaluate(Configuration(n, m)), distinct))
