"""Rendering of attribution runs for people and for machines.

The human form rounds to 6 significant digits.  The machine forms (csv,
json) carry exact float reprs so byte-identical output certifies an
identical computation.  Neither form carries timestamps or hostnames.
"""

from __future__ import annotations

import json
import math
from typing import Sequence

import numpy as np

from .model import AttributionResult

__all__ = [
    "ReportBundle",
    "render_text",
    "render_csv",
    "render_json",
    "render_convergence_text",
    "render_convergence_mean_csv",
    "render_convergence_traces_csv",
]


class ReportBundle:
    """Attribution results for one evaluator, grouped by method label.

    results_by_label maps a unique label to the per-metric result list a
    method run returned.  Labels keep job-file order; metrics keep
    evaluator order, optionally filtered.
    """

    def __init__(
        self,
        feature_names: Sequence[str],
        metric_names: Sequence[str],
        results_by_label: dict[str, list[AttributionResult]],
        metrics: Sequence[str] | None = None,
    ):
        self.feature_names = tuple(feature_names)
        self.metric_names = tuple(metrics) if metrics is not None else tuple(metric_names)
        for name in self.metric_names:
            if name not in metric_names:
                raise ValueError(f"unknown metric {name!r}")
        self.labels = tuple(results_by_label)
        self._by_label_metric: dict[tuple[str, str], AttributionResult] = {}
        for label, results in results_by_label.items():
            for res in results:
                self._by_label_metric[(label, res.metric)] = res

    def result(self, label: str, metric: str) -> AttributionResult:
        return self._by_label_metric[(label, metric)]


def _unattributed(res: AttributionResult) -> float:
    # Recomputed at render time from the reported parts, never copied from
    # the result, so the printed row always balances the printed column.
    return res.full_value - res.baseline - math.fsum(res.attributions)


def _rows(bundle: ReportBundle, metric: str) -> list[tuple[str, list[float | int]]]:
    rows: list[tuple[str, list[float | int]]] = []
    rows.append(("baseline", [bundle.result(l, metric).baseline for l in bundle.labels]))
    for idx, feature in enumerate(bundle.feature_names):
        rows.append(
            (feature, [bundle.result(l, metric).attributions[idx] for l in bundle.labels])
        )
    rows.append(
        ("unattributed", [_unattributed(bundle.result(l, metric)) for l in bundle.labels])
    )
    rows.append(
        ("full_value", [bundle.result(l, metric).full_value for l in bundle.labels])
    )
    rows.append(
        (
            "unique_evaluations",
            [bundle.result(l, metric).unique_evaluations for l in bundle.labels],
        )
    )
    return rows


def _cell_text(value: float | int) -> str:
    if isinstance(value, int):
        return str(value)
    return format(value, ".6g")


def render_text(bundle: ReportBundle) -> str:
    """Aligned per-metric tables at 6 significant digits."""
    blocks = []
    for metric in bundle.metric_names:
        rows = _rows(bundle, metric)
        header = ["quantity", *bundle.labels]
        table = [header] + [
            [name, *(_cell_text(v) for v in values)] for name, values in rows
        ]
        widths = [max(len(row[col]) for row in table) for col in range(len(header))]
        lines = [f"metric: {metric}"]
        for row in table:
            cells = [row[0].ljust(widths[0])]
            cells += [row[col].rjust(widths[col]) for col in range(1, len(header))]
            lines.append("  ".join(cells).rstrip())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _cell_exact(value: float | int) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def render_csv(bundle: ReportBundle) -> str:
    """Exact-value CSV: one row block per metric, one column per method."""
    lines = [",".join(["metric", "quantity", *bundle.labels])]
    for metric in bundle.metric_names:
        for name, values in _rows(bundle, metric):
            lines.append(",".join([metric, name, *(_cell_exact(v) for v in values)]))
    return "\n".join(lines) + "\n"


def render_json(bundle: ReportBundle) -> str:
    """Exact-value JSON with sorted keys (stable bytes for stable numbers)."""
    payload = {
        "feature_names": list(bundle.feature_names),
        "metrics": {
            metric: {
                label: {
                    "method": res.method,
                    "baseline": res.baseline,
                    "attributions": list(res.attributions),
                    "unattributed": _unattributed(res),
                    "full_value": res.full_value,
                    "unique_evaluations": res.unique_evaluations,
                    "seed": res.seed,
                    "scaled": res.scaled,
                    "scaling_degenerate": res.scaling_degenerate,
                }
                for label in bundle.labels
                for res in [bundle.result(label, metric)]
            }
            for metric in bundle.metric_names
        },
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def render_convergence_mean_csv(study) -> str:
    """Mean relative error per estimator on the shared evaluation grid.

    Column order: unique_evals, then estimators nested inside metrics.
    Grid points where some seed has no checkpoint yet print empty cells.
    """
    single = len(study.metric_names) == 1
    header = ["unique_evals"]
    columns = []
    for q, metric in enumerate(study.metric_names):
        for estimator, means in study.mean_errors.items():
            header.append(estimator if single else f"{metric}.{estimator}")
            columns.append(means[q])
    lines = [",".join(header)]
    for row, point in enumerate(study.grid):
        cells = [str(int(point))]
        for col in columns:
            value = float(col[row])
            cells.append("" if math.isnan(value) else repr(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_convergence_traces_csv(study) -> str:
    """Every checkpoint of every per-seed trace, stacked long-form."""
    lines = ["metric,estimator,seed,unique_evals,relative_error"]
    for estimator, per_seed in study.traces.items():
        for seed, per_metric in zip(study.seeds, per_seed):
            for metric, trace in zip(study.metric_names, per_metric):
                for point in trace.checkpoints:
                    err = (
                        ""
                        if point.relative_error is None
                        else repr(point.relative_error)
                    )
                    lines.append(
                        f"{metric},{estimator},{seed},{point.unique_evaluations},{err}"
                    )
    return "\n".join(lines) + "\n"


def render_convergence_text(study) -> str:
    """Compact digest: mean error at the last grid point each estimator
    has fully populated."""
    lines = ["convergence (mean relative error at the final defined grid point)"]
    for q, metric in enumerate(study.metric_names):
        for estimator, means in study.mean_errors.items():
            col = means[q]
            finite = col[~np.isnan(col)]
            final = float(finite[-1]) if finite.size else float("nan")
            lines.append(f"  {metric}  {estimator}  {format(final, '.6g')}")
    return "\n".join(lines) + "\n"
