"""Command-line entry points.

Exit codes: 0 success, 1 configuration or I/O failure, 2 when every prompt
of an extraction lost all its providers.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .config import DEFAULT_STORE, RunConfig, load_config
from .errors import ConfigError, ReqFusionError
from .ingest import DocumentFormat, load_document
from .metrics import (
    ManualBaseline,
    ablation_compare,
    calibrate_weights,
    compute_report,
    cost_time_report,
    load_ground_truth,
)
from .pipeline import run_extraction, summarize
from .simulate import SimulationParams, simulate_hallucination
from .store import RequirementStore, ReviewStateKind

_FORMAT_BY_SUFFIX = {
    ".md": DocumentFormat.MARKDOWN,
    ".markdown": DocumentFormat.MARKDOWN,
    ".txt": DocumentFormat.PLAIN_TEXT,
    ".text": DocumentFormat.PLAIN_TEXT,
}


def _load_config_arg(config_path: str | None) -> RunConfig:
    path = config_path or os.environ.get("REQFUSION_CONFIG")
    if not path:
        raise ConfigError("no config given: use --config or REQFUSION_CONFIG")
    return load_config(path)


def _resolve_store(store_path: str | None, config: RunConfig | None) -> RequirementStore:
    path = (
        store_path
        or (config.store_path if config else None)
        or os.environ.get("REQFUSION_STORE")
        or DEFAULT_STORE
    )
    return RequirementStore(path)


def _document_from_path(path: Path, fmt: str | None, manifest_path: str | None):
    if fmt:
        doc_format = DocumentFormat(fmt)
    else:
        doc_format = _FORMAT_BY_SUFFIX.get(path.suffix.lower(), DocumentFormat.PRE_EXTRACTED)
    manifest = None
    sidecar = Path(manifest_path) if manifest_path else path.with_suffix(path.suffix + ".manifest.json")
    if sidecar.is_file():
        manifest = sidecar.read_text(encoding="utf-8")
    return load_document(path.read_bytes(), doc_format, title=path.stem, manifest=manifest)


@click.group()
def main():
    """Multi-provider requirements extraction engine."""


@main.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", type=click.Path(), help="run configuration file")
@click.option("--mode", type=click.Choice(["parallel", "sequential"]), help="override run mode")
@click.option("--prompt-mode", type=click.Choice(["pegs", "generic"]), help="override prompt mode")
@click.option("--max-in-flight", type=int, help="max concurrent prompts")
@click.option("--cost-routing", type=click.Choice(["on", "off"]), help="route simple docs to the cheapest provider")
@click.option("--complexity-cutoff", type=float, help="complexity below which routing applies")
@click.option("--prompt-dir", type=click.Path(), help="prompt template override directory")
@click.option("--store", "store_path", type=click.Path(), help="store file path")
@click.option("--format", "doc_format", type=click.Choice([f.value for f in DocumentFormat]))
@click.option("--manifest", type=click.Path(), help="section manifest for pre-extracted input")
def extract(inputs, config_path, mode, prompt_mode, max_in_flight, cost_routing,
            complexity_cutoff, prompt_dir, store_path, doc_format, manifest):
    """Ingest documents, extract requirements and persist the runs."""
    try:
        config = _load_config_arg(config_path)
        if mode:
            config.mode = type(config.mode)(mode)
        if prompt_mode:
            config.prompt_mode = type(config.prompt_mode)(prompt_mode)
        if max_in_flight:
            config.max_in_flight = max_in_flight
        if cost_routing:
            config.cost_routing = cost_routing == "on"
        if complexity_cutoff is not None:
            config.complexity_cutoff = complexity_cutoff
        if prompt_dir:
            config.prompt_dir = prompt_dir
        config.validate()
        store = _resolve_store(store_path, config)

        all_failed = True
        for path in inputs:
            doc = _document_from_path(path, doc_format, manifest)
            outcome = run_extraction(config, doc, store=store)
            if outcome.batch.all_failed:
                click.echo(f"{path}: every provider failed for every prompt", err=True)
                continue
            all_failed = False
            summary = summarize(outcome)
            click.echo(f"document: {doc.title} ({summary['doc_id']})")
            click.echo(f"run: {summary['run_id']}")
            click.echo(
                f"chunks: {summary['chunks']}  prompts: {summary['prompts']}"
                f"  failed prompts: {summary['failed_prompts']}"
            )
            click.echo(
                f"requirements: {summary['total']} total, "
                f"functional {summary['functional']} ({summary['functional_pct']}%) / "
                f"non-functional {summary['non_functional']} ({summary['non_functional_pct']}%)"
            )
            click.echo(f"flagged for review: {summary['flagged']}")
            click.echo(f"total cost: ${summary['total_cost_usd']:.6f}")
        if all_failed:
            sys.exit(2)
    except (ReqFusionError, OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--config", "config_path", type=click.Path())
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8400, type=int)
def serve(config_path, host, port):
    """Run the HTTP review service."""
    try:
        config = _load_config_arg(config_path)
        if not config.auth_token:
            raise ConfigError("serve requires auth_token in the config")
        store = _resolve_store(None, config)
        from .service import create_app

        import uvicorn

        uvicorn.run(create_app(config, store), host=host, port=port, log_level="info")
    except (ReqFusionError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.argument("run_id")
@click.option("--store", "store_path", type=click.Path())
@click.option("--config", "config_path", type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default="jsonl")
@click.option("--out", type=click.Path(), help="write to file instead of stdout")
def export(run_id, store_path, config_path, fmt, out):
    """Export the final (auto-accepted + accepted) requirement set."""
    try:
        config = _load_config_arg(config_path) if (config_path or os.environ.get("REQFUSION_CONFIG")) else None
        store = _resolve_store(store_path, config)
        payload = store.export_final(run_id, fmt)
        if out:
            Path(out).write_text(payload, encoding="utf-8")
        else:
            click.echo(payload, nl=False)
    except (ReqFusionError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.argument("req_id")
@click.argument("decision", type=click.Choice(["accept", "reject"]))
@click.option("--reviewer", required=True)
@click.option("--note", default=None)
@click.option("--store", "store_path", type=click.Path())
@click.option("--config", "config_path", type=click.Path())
def review(req_id, decision, reviewer, note, store_path, config_path):
    """Record an accept/reject decision on a pending requirement."""
    try:
        config = _load_config_arg(config_path) if (config_path or os.environ.get("REQFUSION_CONFIG")) else None
        store = _resolve_store(store_path, config)
        state = ReviewStateKind.ACCEPTED if decision == "accept" else ReviewStateKind.REJECTED
        result = store.decide(req_id, state, reviewer=reviewer, note=note)
        click.echo(f"{req_id}: {result.state.value} by {result.reviewer} at {result.decided_at}")
    except (ReqFusionError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.argument("run_id")
@click.option("--ground-truth", "gt_path", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", type=click.Path(), help="write machine-readable report")
@click.option("--store", "store_path", type=click.Path())
@click.option("--config", "config_path", type=click.Path())
@click.option("--compare-run", help="second run id for a prompting-strategy comparison")
def eval(run_id, gt_path, report_path, store_path, config_path, compare_run):
    """Score a persisted run against a ground-truth record file."""
    try:
        config = _load_config_arg(config_path) if (config_path or os.environ.get("REQFUSION_CONFIG")) else None
        store = _resolve_store(store_path, config)
        ground_truth = load_ground_truth(gt_path)

        def report_for(rid: str):
            merged = [s.requirement for s in store.get_run(rid)]
            return compute_report(merged, ground_truth)

        report = report_for(run_id)
        _print_report(run_id, report)
        obj = report.to_obj()

        if compare_run:
            other = report_for(compare_run)
            delta = ablation_compare(report, other)
            click.echo("\ndelta vs run %s (this minus other):" % compare_run)
            click.echo(
                f"  precision {delta.precision_delta:+.2f}  recall {delta.recall_delta:+.2f}"
                f"  f1 {delta.f1_delta:+.2f}  coverage {delta.coverage_delta_pp:+.1f}pp"
            )
            obj["ablation_delta"] = delta.to_obj()

        if report_path:
            Path(report_path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
    except (ReqFusionError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


def _print_report(run_id, report):
    click.echo(f"evaluation of run {run_id}")
    click.echo("category      tp   fp   fn   precision  recall  f1")
    for cat, counts in report.per_category.items():
        click.echo(
            f"{cat.label:<12} {counts.tp:>4} {counts.fp:>4} {counts.fn:>4}"
            f"   {counts.precision:>8.2f} {counts.recall:>7.2f} {counts.f1:>5.2f}"
        )
    o = report.overall
    click.echo(
        f"{'overall':<12} {o.tp:>4} {o.fp:>4} {o.fn:>4}"
        f"   {o.precision:>8.2f} {o.recall:>7.2f} {o.f1:>5.2f}"
    )
    click.echo(f"category coverage: {report.coverage_percent():.1f}%")


@main.command()
@click.option("--n-items", default=12, type=int)
@click.option("--n-providers", default=3, type=int)
@click.option("--fp-rate-single", default=0.34, type=float)
@click.option("--overlap-rate", default=0.5, type=float)
@click.option("--trials", default=1000, type=int)
@click.option("--seed", default=7, type=int)
@click.option("--detection-rate", default=0.8, type=float)
def simulate(n_items, n_providers, fp_rate_single, overlap_rate, trials, seed, detection_rate):
    """Monte-Carlo check that consensus suppresses hallucinations."""
    try:
        params = SimulationParams(
            n_items=n_items,
            n_providers=n_providers,
            fp_rate_single=fp_rate_single,
            overlap_rate=overlap_rate,
            trials=trials,
            seed=seed,
            detection_rate=detection_rate,
        )
        report = simulate_hallucination(params)
        click.echo(json.dumps(report.to_obj(), indent=2))
    except ReqFusionError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command("calibrate-weights")
@click.option("--f1", "f1_entries", multiple=True, required=True,
              help="provider=f1, e.g. --f1 alpha=0.81 (repeatable)")
def calibrate(f1_entries):
    """Derive provider weights from standalone F1 scores."""
    try:
        scores = {}
        for entry in f1_entries:
            name, _, value = entry.partition("=")
            if not name or not value:
                raise ConfigError(f"bad --f1 entry {entry!r}, expected provider=f1")
            scores[name] = float(value)
        click.echo(json.dumps(calibrate_weights(scores), indent=2))
    except (ReqFusionError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command("cost-report")
@click.argument("run_id")
@click.option("--store", "store_path", type=click.Path())
@click.option("--total-cost", type=float, required=True, help="engine cost in USD for the run")
@click.option("--wall-seconds", type=float, required=True)
@click.option("--manual-rate", type=float, default=60.50, help="manual hourly rate in USD")
@click.option("--manual-throughput", type=float, default=12.3, help="manual requirements per hour")
def cost_report(run_id, store_path, total_cost, wall_seconds, manual_rate, manual_throughput):
    """Engine vs manual cost/time comparison for a persisted run."""
    try:
        store = _resolve_store(store_path, None)
        merged_count = len(store.get_run(run_id))
        report = cost_time_report(
            total_cost,
            wall_seconds,
            merged_count,
            ManualBaseline(hourly_rate_usd=manual_rate, requirements_per_hour=manual_throughput),
        )
        click.echo(json.dumps(report.to_obj(), indent=2))
    except (ReqFusionError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
