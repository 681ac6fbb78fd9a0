"""Command-line front end.

Three subcommands, each driven by a YAML job file:

    shapattr attribute job.yaml   run the listed methods, print a report
    shapattr converge job.yaml    multi-seed sampling-error study
    shapattr dump job.yaml        evaluate every configuration, export CSV

--threads, --seed and --output override the job file.  Exit codes:
0 success, 2 job validation failure, 3 evaluator failure at run time.
Reports never carry timestamps, so reruns of a deterministic job produce
byte-identical machine output; --threads 1 is the canonical mode.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .cache import ensure_cached, evaluate_masks
from .convergence import run_convergence_study
from .jobs import (
    JobError,
    JobSpec,
    load_job,
    validate_for_attribute,
    validate_for_converge,
    validate_for_dump,
)
from .methods import is_stochastic, run_method
from .model import AttributionError
from .montecarlo import SamplerConfig
from .report import (
    ReportBundle,
    render_convergence_mean_csv,
    render_convergence_text,
    render_convergence_traces_csv,
    render_csv,
    render_json,
    render_text,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_EVALUATOR = 3


def _write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(data)
    print(f"wrote {path}", file=sys.stderr)


def _run_attribute(spec: JobSpec) -> int:
    validate_for_attribute(spec)
    cache = ensure_cached(spec.evaluator)
    results_by_label = {}
    for method in spec.methods:
        sampler = None
        if is_stochastic(method.name):
            sampler = SamplerConfig(
                budget=method.budget,
                seed=spec.seed,
                scale_to_full_attribution=method.scale,
                trace_every=method.trace_every,
            )
        results_by_label[method.label] = run_method(
            cache,
            method.name,
            order=method.order,
            sampler=sampler,
            threads=spec.threads,
        )
    bundle = ReportBundle(
        cache.feature_names, cache.metric_names, results_by_label, spec.metrics
    )
    sys.stdout.write(render_text(bundle))
    if spec.output is not None:
        data = render_json(bundle) if spec.format == "json" else render_csv(bundle)
        _write(spec.output, data)
    return EXIT_OK


def _run_converge(spec: JobSpec) -> int:
    validate_for_converge(spec)
    block = spec.convergence
    study = run_convergence_study(
        spec.evaluator,
        seeds=range(spec.seed, spec.seed + block.seeds),
        budget_sequences=block.budget_sequences,
        budget_lifts=block.budget_lifts,
        trace_every=block.trace_every,
        threads=spec.threads,
    )
    sys.stdout.write(render_convergence_text(study))
    if spec.output is not None:
        base = spec.output
        _write(base.with_name(base.name + "_mean.csv"), render_convergence_mean_csv(study))
        _write(
            base.with_name(base.name + "_traces.csv"),
            render_convergence_traces_csv(study),
        )
    else:
        sys.stdout.write("\n")
        sys.stdout.write(render_convergence_mean_csv(study))
    return EXIT_OK


def _run_dump(spec: JobSpec) -> int:
    validate_for_dump(spec)
    cache = ensure_cached(spec.evaluator)
    evaluate_masks(cache, range(1 << cache.n_features), threads=spec.threads)
    data = cache.export_csv()
    if spec.output is not None:
        _write(spec.output, data)
    else:
        sys.stdout.write(data)
    return EXIT_OK


_COMMANDS = {
    "attribute": _run_attribute,
    "converge": _run_converge,
    "dump": _run_dump,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapattr",
        description="Attribute portfolio performance metrics to strategy features.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "attribute": "run the job's attribution methods and print a report",
        "converge": "run a multi-seed sampling convergence study",
        "dump": "evaluate every feature configuration and export the table",
    }
    for name, text in helps.items():
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("job", type=Path, help="YAML job file")
        cmd.add_argument(
            "--threads", type=int, help="evaluation thread count (overrides the job)"
        )
        cmd.add_argument(
            "--seed", type=int, help="sampler base seed (overrides the job)"
        )
        cmd.add_argument(
            "--output", type=Path, help="output path (overrides the job)"
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = load_job(args.job).with_overrides(
            seed=args.seed, threads=args.threads, output=args.output
        )
        if spec.threads < 1:
            raise JobError("threads must be >= 1")
        if spec.seed is not None and spec.seed < 0:
            raise JobError("seed must be >= 0")
        return _COMMANDS[args.command](spec)
    except JobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except AttributionError as exc:
        print(f"evaluator failure: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR


if __name__ == "__main__":
    sys.exit(main())
