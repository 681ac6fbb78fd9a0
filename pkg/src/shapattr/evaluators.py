"""Built-in performance evaluators.

TableEvaluator answers from a (possibly partial) configuration/metric table;
AdditiveEvaluator is the exactly-attributable linear case; QuadraticEvaluator
is the PSD quadratic form used for convergence experiments; RelabeledEvaluator
permutes feature identities (fairness/equivariance testing).  The synthetic
rebalance simulator lives in :mod:`shapattr.synthetic` and is re-exported here.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import tableio
from .model import (
    Configuration,
    MetricVector,
    MissingConfigurationError,
    PerformanceEvaluator,
    validate_permutation,
)
from .synthetic import SyntheticRebalanceEvaluator

__all__ = [
    "TableEvaluator",
    "AdditiveEvaluator",
    "QuadraticEvaluator",
    "SumEvaluator",
    "RelabeledEvaluator",
    "SyntheticRebalanceEvaluator",
]


class TableEvaluator(PerformanceEvaluator):
    """Evaluator backed by explicit rows; raises on configurations it lacks.

    Partial tables are legal so this doubles as the storage format for
    exported caches of expensive backtests.
    """

    supports_concurrent_evaluate = True

    def __init__(
        self,
        n: int,
        metric_names: Sequence[str],
        rows: Mapping[int, Sequence[float]],
    ) -> None:
        self._n = n
        self._metric_names = tuple(metric_names)
        self._rows: dict[int, MetricVector] = {}
        for mask, values in rows.items():
            Configuration(n, mask)  # range check
            if len(values) != len(self._metric_names):
                raise ValueError(
                    f"row {mask}: {len(values)} values for {len(self._metric_names)} metrics"
                )
            self._rows[mask] = MetricVector(tuple(values), self._metric_names)

    @classmethod
    def from_csv(cls, text: str) -> "TableEvaluator":
        """Parse the table CSV format (see :mod:`shapattr.tableio`)."""
        n, metric_names, rows = tableio.parse_table(text)
        return cls(n, metric_names, rows)

    @classmethod
    def from_path(cls, path: str | Path) -> "TableEvaluator":
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))

    @property
    def n_features(self) -> int:
        return self._n

    @property
    def metric_names(self) -> tuple[str, ...]:
        return self._metric_names

    def masks(self) -> list[int]:
        return sorted(self._rows)

    def evaluate(self, config: Configuration) -> MetricVector:
        self._check_config(config)
        try:
            return self._rows[config.mask]
        except KeyError:
            raise MissingConfigurationError(
                f"no table row for configuration {config.bits}"
            ) from None

    def to_csv(self) -> str:
        """Canonical byte layout: mask-ordered rows, repr floats."""
        return tableio.format_table(
            self._n, self._metric_names, {m: v.values for m, v in self._rows.items()}
        )


class AdditiveEvaluator(PerformanceEvaluator):
    """f(x) = intercept + coefficients . x; every method recovers it exactly."""

    supports_concurrent_evaluate = True

    def __init__(
        self,
        coefficients: Sequence[float],
        intercept: float = 0.0,
        metric_name: str = "value",
    ) -> None:
        self._coef = np.asarray(coefficients, dtype=np.float64)
        if self._coef.ndim != 1 or self._coef.size < 1:
            raise ValueError("coefficients must be a non-empty vector")
        self._intercept = float(intercept)
        self._metric = (metric_name,)

    @property
    def n_features(self) -> int:
        return self._coef.size

    @property
    def metric_names(self) -> tuple[str, ...]:
        return self._metric

    def evaluate(self, config: Configuration) -> MetricVector:
        self._check_config(config)
        bits = np.array(config.bits, dtype=np.float64)
        return MetricVector((self._intercept + float(self._coef @ bits),), self._metric)


class QuadraticEvaluator(PerformanceEvaluator):
    """f(x) = x' P x with symmetric positive-semidefinite P.

    Writing f(x) = sum_i P_ii x_i + 2 sum_{i<j} P_ij x_i x_j and splitting
    each pairwise term evenly between its two features gives the exact
    Shapley attribution a = P 1 (each a_i = P_ii + sum_{j != i} P_ij), with
    baseline 0; :meth:`true_shapley` returns it.
    """

    supports_concurrent_evaluate = True

    def __init__(self, matrix, metric_name: str = "value") -> None:
        P = np.asarray(matrix, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 1:
            raise ValueError(f"matrix must be square, got {P.shape}")
        if not np.isfinite(P).all():
            raise ValueError("matrix must be finite")
        if not np.array_equal(P, P.T):
            raise ValueError("matrix must be symmetric")
        floor = -1e-10 * max(1.0, float(np.abs(P).max()))
        if float(np.linalg.eigvalsh(P).min()) < floor:
            raise ValueError("matrix must be positive semidefinite")
        self._P = P
        self._metric = (metric_name,)

    @classmethod
    def wishart(cls, n: int, seed: int, metric_name: str = "value") -> "QuadraticEvaluator":
        """P = Z'Z with standard-normal Z (symmetrized exactly, PSD by construction)."""
        Z = np.random.default_rng(seed).standard_normal((n, n))
        P = Z.T @ Z
        return cls((P + P.T) / 2.0, metric_name)

    @property
    def matrix(self) -> np.ndarray:
        return self._P.copy()

    @property
    def n_features(self) -> int:
        return self._P.shape[0]

    @property
    def metric_names(self) -> tuple[str, ...]:
        return self._metric

    def true_shapley(self) -> np.ndarray:
        """Closed-form exact Shapley attribution: the row sums P 1."""
        return self._P.sum(axis=1)

    def evaluate(self, config: Configuration) -> MetricVector:
        self._check_config(config)
        x = np.array(config.bits, dtype=np.float64)
        return MetricVector((float(x @ self._P @ x),), self._metric)


class SumEvaluator(PerformanceEvaluator):
    """Pointwise sum of evaluators sharing feature count and metric names."""

    def __init__(self, parts: Sequence[PerformanceEvaluator]) -> None:
        if not parts:
            raise ValueError("need at least one evaluator")
        first = parts[0]
        for p in parts[1:]:
            if p.n_features != first.n_features:
                raise ValueError("evaluators disagree on feature count")
            if p.metric_names != first.metric_names:
                raise ValueError("evaluators disagree on metric names")
        self._parts = tuple(parts)
        self.supports_concurrent_evaluate = all(
            p.supports_concurrent_evaluate for p in parts
        )

    @property
    def parts(self) -> tuple[PerformanceEvaluator, ...]:
        return self._parts

    @property
    def n_features(self) -> int:
        return self._parts[0].n_features

    @property
    def metric_names(self) -> tuple[str, ...]:
        return self._parts[0].metric_names

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self._parts[0].feature_names

    def evaluate(self, config: Configuration) -> MetricVector:
        self._check_config(config)
        total = np.zeros(len(self.metric_names), dtype=np.float64)
        for p in self._parts:
            total += p.evaluate(config).values
        return MetricVector(tuple(total), self.metric_names)


class RelabeledEvaluator(PerformanceEvaluator):
    """View of an evaluator with features renamed: feature j here is feature
    perm[j] of the inner evaluator.  Used to test relabeling equivariance."""

    def __init__(self, inner: PerformanceEvaluator, perm: Sequence[int]) -> None:
        self._inner = inner
        self._perm = validate_permutation(perm, inner.n_features)
        self.supports_concurrent_evaluate = inner.supports_concurrent_evaluate

    @property
    def n_features(self) -> int:
        return self._inner.n_features

    @property
    def metric_names(self) -> tuple[str, ...]:
        return self._inner.metric_names

    @property
    def feature_names(self) -> tuple[str, ...]:
        inner_names = self._inner.feature_names
        return tuple(inner_names[self._perm[j]] for j in range(self.n_features))

    def evaluate(self, config: Configuration) -> MetricVector:
        self._check_config(config)
        mask = 0
        for j in range(config.n):
            if (config.mask >> j) & 1:
                mask |= 1 << self._perm[j]
        return self._inner.evaluate(Configuration(config.n, mask))
