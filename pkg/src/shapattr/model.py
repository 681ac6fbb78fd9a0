"""Core types for on/off feature attribution.

A strategy exposes n binary features (signals, constraints, overlays).  A
configuration switches each feature on or off; an evaluator maps a
configuration to one or more performance metrics (backtest statistics, table
lookups, closed forms).  Attribution methods split the full-configuration
value f(1) into a baseline b = f(0) plus one additive term per feature,
reporting any remainder explicitly instead of redistributing it.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "MAX_FEATURES",
    "DEFAULT_ENUMERATION_LIMIT",
    "AttributionError",
    "FeatureAlreadyActiveError",
    "EnumerationLimitError",
    "InvalidPermutationError",
    "TableFormatError",
    "MissingConfigurationError",
    "DecompositionError",
    "ZeroReferenceError",
    "EvaluationError",
    "Configuration",
    "MetricVector",
    "PerformanceEvaluator",
    "AttributionResult",
    "lift",
    "enumerate_configurations",
    "validate_permutation",
]

# Masks are stored in a single Python int; 64 keeps numpy interop trivial.
MAX_FEATURES = 64
# Full enumeration is 2^n evaluations; refuse silently huge requests.
DEFAULT_ENUMERATION_LIMIT = 20


class AttributionError(Exception):
    """Base class for errors raised by this package."""


class FeatureAlreadyActiveError(AttributionError):
    """Lift requested for a feature that is already on in the configuration."""


class EnumerationLimitError(AttributionError):
    """A method needing 2^n (or n!) evaluations was asked for too large an n."""


class InvalidPermutationError(AttributionError):
    """An ordering is not a permutation of the feature indices."""


class TableFormatError(AttributionError):
    """A configuration/metric table is malformed (header, cells, duplicates)."""


class MissingConfigurationError(AttributionError, KeyError):
    """A table evaluator was asked for a configuration it has no row for."""

    def __str__(self) -> str:  # KeyError quotes its args; keep the message readable
        return AttributionError.__str__(self)


class DecompositionError(AttributionError):
    """Component metrics do not sum to the declared total."""


class ZeroReferenceError(AttributionError):
    """Relative error requested against a zero-norm reference vector."""


class EvaluationError(AttributionError):
    """An underlying evaluator failed while computing a metric."""


@dataclass(frozen=True)
class Configuration:
    """An on/off state for n features, stored as a bit mask.

    Bit i of ``mask`` is feature i (0-based), so the integer value of the
    mask orders configurations canonically: for n = 2 the order is
    (0,0), (1,0), (0,1), (1,1).
    """

    n: int
    mask: int

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_FEATURES:
            raise ValueError(f"feature count must be in [1, {MAX_FEATURES}], got {self.n}")
        if not 0 <= self.mask < (1 << self.n):
            raise ValueError(f"mask {self.mask} out of range for n={self.n}")

    @classmethod
    def zeros(cls, n: int) -> "Configuration":
        """All features off."""
        return cls(n, 0)

    @classmethod
    def ones(cls, n: int) -> "Configuration":
        """All features on."""
        return cls(n, (1 << n) - 1)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "Configuration":
        """Build from a 0/1 sequence, bits[i] = feature i."""
        mask = 0
        for i, bit in enumerate(bits):
            if bit not in (0, 1):
                raise ValueError(f"bit {i} must be 0 or 1, got {bit!r}")
            mask |= bit << i
        return cls(len(bits), mask)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.mask >> i) & 1 for i in range(self.n))

    @property
    def active_count(self) -> int:
        return self.mask.bit_count()

    def is_active(self, i: int) -> bool:
        self._check_index(i)
        return bool((self.mask >> i) & 1)

    def with_feature(self, i: int) -> "Configuration":
        """Copy with feature i switched on (it may already be on)."""
        self._check_index(i)
        return Configuration(self.n, self.mask | (1 << i))

    def without_feature(self, i: int) -> "Configuration":
        """Copy with feature i switched off."""
        self._check_index(i)
        return Configuration(self.n, self.mask & ~(1 << i))

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise IndexError(f"feature index {i} out of range for n={self.n}")


@dataclass(frozen=True)
class MetricVector:
    """Values of one or more named metrics at a single configuration."""

    values: tuple[float, ...]
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.names):
            raise ValueError(
                f"{len(self.values)} values for {len(self.names)} metric names"
            )
        if not self.values:
            raise ValueError("a metric vector needs at least one metric")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "names", tuple(self.names))

    def __getitem__(self, name: str) -> float:
        try:
            return self.values[self.names.index(name)]
        except ValueError:
            raise KeyError(name) from None


class PerformanceEvaluator(abc.ABC):
    """Maps configurations to metric vectors.

    Subclasses must be deterministic: the same configuration always yields
    the same metrics.  ``supports_concurrent_evaluate`` declares whether
    evaluate() may be called from several threads at once; the caching
    wrapper serializes calls to evaluators that do not.
    """

    supports_concurrent_evaluate: bool = False

    @property
    @abc.abstractmethod
    def n_features(self) -> int: ...

    @property
    @abc.abstractmethod
    def metric_names(self) -> tuple[str, ...]: ...

    @property
    def feature_names(self) -> tuple[str, ...]:
        """Display names; default feat_1..feat_n (1-based, matching tables)."""
        return tuple(f"feat_{i + 1}" for i in range(self.n_features))

    @abc.abstractmethod
    def evaluate(self, config: Configuration) -> MetricVector: ...

    def _check_config(self, config: Configuration) -> None:
        if config.n != self.n_features:
            raise ValueError(
                f"configuration has {config.n} features, evaluator expects {self.n_features}"
            )


@dataclass(frozen=True)
class AttributionResult:
    """Additive attribution of one metric across n features.

    Invariant reported, never enforced: baseline + sum(attributions) +
    residual == full_value (up to float arithmetic).  Methods that guarantee
    full attribution produce a residual at rounding level; the others report
    whatever is left over.
    """

    method: str
    metric: str
    baseline: float
    attributions: tuple[float, ...]
    full_value: float
    residual: float
    unique_evaluations: int
    seed: int | None = None
    scaled: bool = False
    scaling_degenerate: bool = False

    @property
    def n_features(self) -> int:
        return len(self.attributions)

    def total_attributed(self) -> float:
        return math.fsum(self.attributions)


def build_attribution_results(
    method: str,
    metric_names: Sequence[str],
    baseline: Sequence[float],
    attributions: Sequence[Sequence[float]],
    full_value: Sequence[float],
    unique_evaluations: int,
    seed: int | None = None,
    scaled: bool = False,
    scaling_degenerate: Sequence[bool] | None = None,
) -> list[AttributionResult]:
    """Assemble one result per metric; residual recomputed, never trusted.

    ``attributions`` is indexed [metric][feature].
    """
    results = []
    for q, name in enumerate(metric_names):
        a = tuple(float(v) for v in attributions[q])
        b = float(baseline[q])
        full = float(full_value[q])
        results.append(
            AttributionResult(
                method=method,
                metric=name,
                baseline=b,
                attributions=a,
                full_value=full,
                residual=full - b - math.fsum(a),
                unique_evaluations=unique_evaluations,
                seed=seed,
                scaled=scaled,
                scaling_degenerate=bool(scaling_degenerate[q]) if scaling_degenerate else False,
            )
        )
    return results


def lift(evaluator: PerformanceEvaluator, config: Configuration, i: int) -> MetricVector:
    """Metric change from switching feature i on at ``config``.

    Args:
        evaluator: metric source.
        config: starting configuration; feature i must be off.
        i: 0-based feature index.

    Raises:
        FeatureAlreadyActiveError: feature i is already on.
        IndexError: i is out of range.
    """
    if config.is_active(i):
        raise FeatureAlreadyActiveError(
            f"feature {i} already active in mask {config.mask:#x}"
        )
    on = evaluator.evaluate(config.with_feature(i))
    off = evaluator.evaluate(config)
    return MetricVector(
        tuple(u - v for u, v in zip(on.values, off.values)), off.names
    )


def enumerate_configurations(
    n: int, limit: int = DEFAULT_ENUMERATION_LIMIT
) -> list[Configuration]:
    """All 2^n configurations in mask order.

    Raises:
        EnumerationLimitError: n exceeds ``limit`` (2^n would blow up).
    """
    if n > limit:
        raise EnumerationLimitError(
            f"refusing to enumerate 2^{n} configurations (limit n <= {limit})"
        )
    if not 1 <= n <= MAX_FEATURES:
        raise ValueError(f"feature count must be in [1, {MAX_FEATURES}], got {n}")
    return [Configuration(n, mask) for mask in range(1 << n)]


def validate_permutation(order: Iterable[int], n: int) -> tuple[int, ...]:
    """Check that ``order`` is a permutation of 0..n-1 and return it as a tuple.

    Raises:
        InvalidPermutationError: wrong length, out-of-range or repeated index.
    """
    perm = tuple(int(i) for i in order)
    if sorted(perm) != list(range(n)):
        raise InvalidPermutationError(
            f"{perm!r} is not a permutation of 0..{n - 1}"
        )
    return perm
