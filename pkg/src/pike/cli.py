"""Command line interface: run, replay, analyze, and config utilities."""

from __future__ import annotations

import csv
import dataclasses
import json
import sys
from pathlib import Path

import click

from . import analytics
from .analytics import (
    AXIS_DOLLARS,
    AXIS_QUERIES,
    HashedTokenEmbedding,
    budget_trajectory,
    geomean_trajectory,
    run_statistics,
)
from .config import (
    BackendConfig,
    ConfigError,
    EvaluatorConfig,
    dump_config,
    load_config,
    preset_config,
    preset_names,
)
from .controller import ControllerError, build_agents, build_evaluator, run_search
from .library import LibraryError, load_task
from .replay import ReplayError, replay_report
from .report import ReportError, load_report

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _fail(message: str, code: int) -> None:
    click.echo(message, err=True)
    sys.exit(code)


def _fail_config(exc: ConfigError) -> None:
    for error in exc.errors:
        click.echo(f"config error: {error}", err=True)
    sys.exit(EXIT_CONFIG)


@click.group()
def main() -> None:
    """Multi-agent evolutionary search for program optimization."""


@main.command()
@click.option("--task", "task_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--preset", "preset_name", type=str, help="Use a named preset instead of a config file.")
@click.option("--mock-llm", "mock_script", type=click.Path(exists=True, dir_okay=False), help="Replace the model backend with a response script.")
@click.option("--synthetic-eval", "landscape_path", type=click.Path(exists=True, dir_okay=False), help="Replace the evaluator with a synthetic landscape file.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default="run-report.jsonl", show_default=True)
@click.option("--budget-queries", type=int, default=None, help="Override the query budget.")
@click.option("--rng-seed", type=int, default=None, help="Override the RNG seed.")
@click.option("--zero-clock", is_flag=True, help="Write zero timestamps for byte-reproducible reports.")
def run(task_dir, config_path, preset_name, mock_script, landscape_path, report_path, budget_queries, rng_seed, zero_clock):
    """Run the search on one task and write a run report."""
    if (config_path is None) == (preset_name is None):
        _fail("provide exactly one of --config or --preset", EXIT_CONFIG)
    try:
        config = load_config(config_path) if config_path else preset_config(preset_name)
        strategy = config.strategy
        if budget_queries is not None:
            if budget_queries < 0:
                raise ConfigError(["--budget-queries: must be >= 0"])
            strategy = dataclasses.replace(strategy, query_budget=budget_queries)
        if rng_seed is not None:
            strategy = dataclasses.replace(strategy, rng_seed=rng_seed)
        backend = config.backend
        if mock_script:
            backend = BackendConfig(
                kind="mock", model=backend.model, script_path=mock_script,
                role_models=dict(backend.role_models),
            )
        evaluator_cfg = config.evaluator
        if landscape_path:
            evaluator_cfg = EvaluatorConfig(
                kind="synthetic",
                landscape_path=landscape_path,
                timeout_s=config.evaluator.timeout_s,
            )
        config = dataclasses.replace(
            config, strategy=strategy, backend=backend, evaluator=evaluator_cfg
        ).validated()
    except ConfigError as exc:
        _fail_config(exc)

    try:
        task = load_task(task_dir)
        agents = build_agents(config)
        evaluator = build_evaluator(config)
        try:
            report = run_search(
                task,
                config,
                agents,
                evaluator,
                report_path=report_path,
                clock=(lambda: 0.0) if zero_clock else None,
            )
        finally:
            close = getattr(evaluator, "close", None)
            if close:
                close()
    except (LibraryError, ControllerError) as exc:
        _fail(f"run failed: {exc}", EXIT_RUNTIME)

    footer = report.footer
    click.echo(f"task: {report.task_id}")
    click.echo(f"queries charged: {footer['total_queries']}")
    click.echo(f"dollars charged: {footer['total_dollars']:.4f}")
    click.echo(f"valid solutions: {footer['valid_solutions']}")
    click.echo(f"best objective: {footer['best_objective']:.4f}")
    click.echo(f"clamped speedup: {footer['clamped_speedup']:.4f}")
    click.echo(f"report: {report_path}")
    if not footer.get("complete", False):
        _fail(f"run incomplete: {footer.get('stop_reason')}", EXIT_RUNTIME)


@main.command()
@click.argument("report_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--script", "script_path", type=click.Path(exists=True, dir_okay=False), help="Response script location, when the recorded path moved.")
def replay(report_file, script_path):
    """Re-run a scripted report and verify it reproduces exactly."""
    try:
        report = load_report(report_file)
        result = replay_report(report, script_path=script_path)
    except (ReportError, ReplayError) as exc:
        _fail(f"replay failed: {exc}", EXIT_RUNTIME)
    if result.ok:
        click.echo(f"replay ok: {result.steps_compared} steps, no divergence")
        return
    click.echo(f"replay diverged in {len(result.divergences)} place(s):", err=True)
    for d in result.divergences[:20]:
        click.echo(f"  {d.describe()}", err=True)
    sys.exit(EXIT_RUNTIME)


@main.command()
@click.argument("report_files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="analysis", show_default=True)
@click.option("--grid-points", type=int, default=analytics.DEFAULT_DOLLAR_GRID_POINTS, show_default=True, help="Points on the dollar-budget grid.")
@click.option("--step-budget-dollars", type=float, default=25.0, show_default=True)
@click.option("--similarity/--no-similarity", default=True, show_default=True, help="Compute seed-to-solution similarity with the built-in embedding.")
def analyze(report_files, out_dir, grid_points, step_budget_dollars, similarity):
    """Compute statistics and budget trajectories for one or more reports."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    embedder = HashedTokenEmbedding() if similarity else None
    try:
        reports = [load_report(p) for p in report_files]
        stats = [
            run_statistics(r, embedder=embedder, step_budget_dollars=step_budget_dollars)
            for r in reports
        ]
        stats_path = out / "run_stats.json"
        with open(stats_path, "w", encoding="utf-8") as f:
            json.dump([s.to_dict() for s in stats], f, indent=2, sort_keys=True)

        for report, stat in zip(reports, stats):
            name = _safe_name(report.task_id)
            for axis in (AXIS_QUERIES, AXIS_DOLLARS):
                grid = analytics.default_grid(report, axis, points=grid_points)
                points = budget_trajectory(report, axis, grid)
                _write_trajectory(out / f"trajectory_{axis}_{name}.csv", axis, points)

        speedups = [s.clamped_speedup for s in stats]
        summary = {
            "reports": len(reports),
            "geomean_clamped_speedup": analytics.geometric_mean(speedups),
            "speedups": {s.task_id: s.clamped_speedup for s in stats},
        }
        for axis in (AXIS_QUERIES, AXIS_DOLLARS):
            grid = analytics.default_grid(reports, axis, points=grid_points)
            points = geomean_trajectory(reports, axis, grid)
            _write_trajectory(
                out / f"geomean_trajectory_{axis}.csv", axis, points, suite=len(reports)
            )

        attempts = [s.mean_fix_attempts for s in stats if s.mean_fix_attempts is not None]
        locs = [s.mean_loc_changed for s in stats if s.mean_loc_changed is not None]
        _write_histogram(out / "hist_fix_attempts.csv", attempts, _spread_edges(attempts, 0.5))
        _write_histogram(out / "hist_loc_changed.csv", locs, _spread_edges(locs, 25.0))

        with open(out / "summary.json", "w", encoding="utf-8") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
    except (ReportError, analytics.AnalyticsError) as exc:
        _fail(f"analyze failed: {exc}", EXIT_RUNTIME)

    click.echo(f"analyzed {len(reports)} report(s)")
    click.echo(f"geomean clamped speedup: {summary['geomean_clamped_speedup']:.4f}")
    click.echo(f"outputs in: {out}")


@main.command(name="validate-config")
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
def validate_config(config_file):
    """Validate a config file, reporting every problem with its path."""
    try:
        load_config(config_file)
    except ConfigError as exc:
        _fail_config(exc)
    click.echo("config ok")


@main.command(name="print-presets")
@click.argument("name", required=False)
@click.option("--list", "list_only", is_flag=True, help="Print preset names only.")
def print_presets(name, list_only):
    """Print built-in preset configs as ready-to-edit YAML."""
    if list_only:
        for preset in preset_names():
            click.echo(preset)
        return
    try:
        selected = [name] if name else preset_names()
        for preset in selected:
            click.echo(f"# preset: {preset}")
            click.echo(dump_config(preset_config(preset)))
    except ConfigError as exc:
        _fail_config(exc)


def _safe_name(task_id: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in task_id)


def _write_trajectory(path: Path, axis: str, points, suite: int | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        if suite is None:
            writer.writerow([axis, "clamped_speedup"])
            for p in points:
                writer.writerow([p.budget, p.speedup])
        else:
            writer.writerow([f"per_task_{axis}", f"suite_{axis}", "geomean_clamped_speedup"])
            for p in points:
                writer.writerow([p.budget, p.budget * suite, p.speedup])


def _spread_edges(values, width: float) -> list[float]:
    top = max(values) if values else width
    edges = [0.0]
    while edges[-1] < top:
        edges.append(edges[-1] + width)
    return edges


def _write_histogram(path: Path, values, edges) -> None:
    counts = analytics.histogram(values, edges) if len(edges) >= 2 else []
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["bin_start", "bin_end", "count"])
        for i, count in enumerate(counts):
            writer.writerow([edges[i], edges[i + 1], count])


if __name__ == "__main__":
    main()
