"""Declarative job files for the CLI.

A job is a flat YAML mapping (JSON parses too, YAML being a superset):
evaluator to build, methods to run with per-method options, optional metric
selection, seed, threads, output path/format, and a convergence block for
the converge subcommand.  Validation is strict: unknown keys are errors.
Feature orders in job files are 1-based, matching the feat_N table headers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from .methods import canonical_method, is_stochastic
from .model import (
    AttributionError,
    DEFAULT_ENUMERATION_LIMIT,
    InvalidPermutationError,
    PerformanceEvaluator,
    TableFormatError,
    validate_permutation,
)
from .evaluators import (
    AdditiveEvaluator,
    QuadraticEvaluator,
    SyntheticRebalanceEvaluator,
    TableEvaluator,
)
from .shapley import DEFAULT_FACTORIAL_LIMIT

__all__ = ["JobError", "MethodSpec", "ConvergenceSpec", "JobSpec", "load_job"]


class JobError(AttributionError):
    """A job file failed validation."""


@dataclass(frozen=True)
class MethodSpec:
    name: str  # canonical
    label: str  # unique within the job; report column header
    order: tuple[int, ...] | None = None  # 0-based
    budget: int | None = None
    scale: bool = False
    trace_every: int = 1


@dataclass(frozen=True)
class ConvergenceSpec:
    seeds: int = 1
    budget_sequences: int = 1000
    budget_lifts: int = 500
    trace_every: int = 1


@dataclass(frozen=True)
class JobSpec:
    evaluator: PerformanceEvaluator
    methods: tuple[MethodSpec, ...]
    metrics: tuple[str, ...] | None  # None = all
    seed: int | None
    threads: int
    output: Path | None
    format: str  # csv | json
    convergence: ConvergenceSpec | None

    def with_overrides(
        self,
        *,
        seed: int | None = None,
        threads: int | None = None,
        output: Path | None = None,
    ) -> "JobSpec":
        spec = self
        if seed is not None:
            spec = replace(spec, seed=seed)
        if threads is not None:
            spec = replace(spec, threads=threads)
        if output is not None:
            spec = replace(spec, output=output)
        return spec


def _require_mapping(value, what: str) -> dict:
    if not isinstance(value, dict):
        raise JobError(f"{what} must be a mapping, got {type(value).__name__}")
    return value


def _check_keys(mapping: dict, allowed: set[str], what: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise JobError(f"unknown {what} keys: {', '.join(sorted(unknown))}")


def _int(mapping: dict, key: str, what: str, default=None, minimum=None):
    value = mapping.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise JobError(f"{what}.{key} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise JobError(f"{what}.{key} must be >= {minimum}, got {value}")
    return value


def _number(mapping: dict, key: str, what: str, default=None):
    value = mapping.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise JobError(f"{what}.{key} must be a number, got {value!r}")
    return float(value)


def _build_evaluator(raw: dict, base_dir: Path) -> PerformanceEvaluator:
    spec = _require_mapping(raw, "evaluator")
    kind = spec.get("kind")
    if kind == "table":
        _check_keys(spec, {"kind", "path"}, "evaluator")
        path = spec.get("path")
        if not isinstance(path, str):
            raise JobError("evaluator.path must be a string")
        resolved = (base_dir / path).resolve()
        if not resolved.is_file():
            raise JobError(f"table file not found: {resolved}")
        try:
            return TableEvaluator.from_path(resolved)
        except TableFormatError as exc:
            raise JobError(f"bad table {resolved}: {exc}") from exc
    if kind == "additive":
        _check_keys(spec, {"kind", "coefficients", "intercept", "metric"}, "evaluator")
        coef = spec.get("coefficients")
        if not isinstance(coef, list) or not coef or not all(
            isinstance(c, (int, float)) and not isinstance(c, bool) for c in coef
        ):
            raise JobError("evaluator.coefficients must be a non-empty number list")
        intercept = _number(spec, "intercept", "evaluator", 0.0)
        metric = spec.get("metric", "value")
        if not isinstance(metric, str) or not metric:
            raise JobError("evaluator.metric must be a non-empty string")
        return AdditiveEvaluator(coef, intercept, metric)
    if kind == "quadratic":
        _check_keys(spec, {"kind", "dimension", "seed", "matrix"}, "evaluator")
        matrix = spec.get("matrix")
        if matrix is not None:
            try:
                return QuadraticEvaluator(matrix)
            except ValueError as exc:
                raise JobError(f"bad quadratic matrix: {exc}") from exc
        dimension = _int(spec, "dimension", "evaluator", minimum=1)
        seed = _int(spec, "seed", "evaluator", minimum=0)
        if dimension is None or seed is None:
            raise JobError("quadratic evaluator needs matrix, or dimension and seed")
        return QuadraticEvaluator.wishart(dimension, seed)
    if kind == "synthetic":
        allowed = {
            "kind", "seed", "n_signals", "n_assets", "n_periods",
            "risk_aversion", "risk_limit_pct", "smoothing_weight",
        }
        _check_keys(spec, allowed, "evaluator")
        kwargs = {}
        for key in ("seed", "n_signals", "n_assets", "n_periods"):
            value = _int(spec, key, "evaluator", minimum=0 if key == "seed" else 1)
            if value is not None:
                kwargs[key] = value
        for key in ("risk_aversion", "risk_limit_pct", "smoothing_weight"):
            value = _number(spec, key, "evaluator")
            if value is not None:
                kwargs[key] = value
        try:
            return SyntheticRebalanceEvaluator(**kwargs)
        except ValueError as exc:
            raise JobError(f"bad synthetic evaluator: {exc}") from exc
    raise JobError(
        f"evaluator.kind must be table, additive, quadratic or synthetic, got {kind!r}"
    )


def _build_methods(raw, n: int) -> tuple[MethodSpec, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise JobError("methods must be a list")
    specs: list[MethodSpec] = []
    for pos, entry in enumerate(raw):
        what = f"methods[{pos}]"
        entry = _require_mapping(entry, what)
        _check_keys(entry, {"name", "order", "budget", "scale", "trace_every"}, what)
        name = entry.get("name")
        if not isinstance(name, str):
            raise JobError(f"{what}.name must be a string")
        try:
            method = canonical_method(name)
        except ValueError as exc:
            raise JobError(str(exc)) from exc

        order = None
        if "order" in entry:
            if method != "sequential":
                raise JobError(f"{what}: order applies to sequential only")
            raw_order = entry["order"]
            if not isinstance(raw_order, list):
                raise JobError(f"{what}.order must be a list of 1-based indices")
            try:
                order = validate_permutation((i - 1 for i in raw_order), n)
            except (InvalidPermutationError, TypeError) as exc:
                raise JobError(f"{what}.order: {exc}") from exc

        budget = _int(entry, "budget", what, minimum=1)
        scale = entry.get("scale", False)
        if not isinstance(scale, bool):
            raise JobError(f"{what}.scale must be a boolean")
        trace_every = _int(entry, "trace_every", what, default=1, minimum=1)
        if is_stochastic(method):
            if budget is None:
                raise JobError(f"{what}: {method} needs a budget")
            if scale and method != "sampling_lifts":
                raise JobError(f"{what}: scale applies to sampling_lifts only")
        else:
            for key in ("budget", "scale", "trace_every"):
                if key in entry:
                    raise JobError(f"{what}: {key} applies to sampling methods only")
        specs.append(MethodSpec(method, method, order, budget, scale, trace_every))

    labels: dict[str, int] = {}
    labeled = []
    for spec in specs:
        count = labels.get(spec.label, 0) + 1
        labels[spec.label] = count
        labeled.append(
            spec if count == 1 else replace(spec, label=f"{spec.label}_{count}")
        )
    return tuple(labeled)


def load_job(path: str | Path) -> JobSpec:
    """Parse and validate a job file.

    Raises:
        JobError: unreadable, unparseable, or invalid job.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise JobError(f"cannot read job file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise JobError(f"cannot parse job file {path}: {exc}") from exc
    top = _require_mapping(raw, "job")
    allowed = {
        "evaluator", "methods", "metrics", "seed", "threads",
        "output", "format", "convergence",
    }
    _check_keys(top, allowed, "job")
    if "evaluator" not in top:
        raise JobError("job needs an evaluator")
    evaluator = _build_evaluator(top["evaluator"], path.parent)
    methods = _build_methods(top.get("methods"), evaluator.n_features)

    metrics = top.get("metrics", "all")
    if metrics == "all" or metrics is None:
        selected = None
    else:
        if not isinstance(metrics, list) or not all(isinstance(s, str) for s in metrics):
            raise JobError('metrics must be "all" or a list of metric names')
        unknown = [s for s in metrics if s not in evaluator.metric_names]
        if unknown:
            raise JobError(
                f"unknown metrics {unknown}; evaluator has {list(evaluator.metric_names)}"
            )
        selected = tuple(metrics)

    seed = _int(top, "seed", "job", minimum=0)
    threads = _int(top, "threads", "job", default=1, minimum=1)
    output = top.get("output")
    if output is not None and not isinstance(output, str):
        raise JobError("output must be a path string")
    fmt = top.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise JobError(f'format must be "csv" or "json", got {fmt!r}')

    convergence = None
    if "convergence" in top:
        block = _require_mapping(top["convergence"], "convergence")
        _check_keys(
            block,
            {"seeds", "budget_sequences", "budget_lifts", "trace_every"},
            "convergence",
        )
        convergence = ConvergenceSpec(
            seeds=_int(block, "seeds", "convergence", default=1, minimum=1),
            budget_sequences=_int(
                block, "budget_sequences", "convergence", default=1000, minimum=1
            ),
            budget_lifts=_int(block, "budget_lifts", "convergence", default=500, minimum=1),
            trace_every=_int(block, "trace_every", "convergence", default=1, minimum=1),
        )

    return JobSpec(
        evaluator=evaluator,
        methods=methods,
        metrics=selected,
        seed=seed,
        threads=threads,
        output=(path.parent / output).resolve() if output else None,
        format=fmt,
        convergence=convergence,
    )


def validate_for_attribute(spec: JobSpec) -> None:
    """Static checks for the attribute subcommand (before any evaluation)."""
    if not spec.methods:
        raise JobError("job lists no methods")
    n = spec.evaluator.n_features
    for m in spec.methods:
        if m.name in ("shapley_exact",) and n > DEFAULT_ENUMERATION_LIMIT:
            raise JobError(f"{m.label}: n={n} exceeds the enumeration limit")
        if m.name == "shapley_permutations" and n > DEFAULT_FACTORIAL_LIMIT:
            raise JobError(f"{m.label}: n={n} exceeds the permutation-oracle limit")
    if any(is_stochastic(m.name) for m in spec.methods) and spec.seed is None:
        raise JobError("job lists a stochastic method but no seed")


def validate_for_converge(spec: JobSpec) -> None:
    if spec.convergence is None:
        raise JobError("converge needs a convergence block in the job file")
    if spec.seed is None:
        raise JobError("converge needs a seed (the base of the sampler seed batch)")
    if spec.evaluator.n_features > DEFAULT_ENUMERATION_LIMIT:
        raise JobError(
            f"n={spec.evaluator.n_features} is too large for the exact reference"
        )


def validate_for_dump(spec: JobSpec) -> None:
    if spec.evaluator.n_features > DEFAULT_ENUMERATION_LIMIT:
        raise JobError(
            f"n={spec.evaluator.n_features} exceeds the enumeration limit for dump"
        )
