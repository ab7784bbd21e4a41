#!/usr/bin/env python3
"""Run the offline demo end to end: search, replay check, analytics.

Equivalent CLI session:

    pike run --task fixtures/demo/task --config fixtures/demo/config.yaml \\
        --report out/demo-report.jsonl --zero-clock
    pike replay out/demo-report.jsonl
    pike analyze out/demo-report.jsonl --out out/demo-analysis

Usage: python3 scripts/run_demo.py [--out out]
"""

import argparse
import json
from pathlib import Path

from pike.analytics import AXIS_QUERIES, budget_trajectory, run_statistics
from pike.config import load_config
from pike.controller import build_agents, build_evaluator, run_search
from pike.library import load_task
from pike.replay import replay_report
from pike.report import load_report


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out", type=Path)
    parser.add_argument("--config", default="fixtures/demo/config.yaml")
    parser.add_argument("--task", default="fixtures/demo/task")
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    report_path = args.out / "demo-report.jsonl"

    config = load_config(args.config)
    task = load_task(args.task)
    report = run_search(
        task,
        config,
        build_agents(config),
        build_evaluator(config),
        report_path=str(report_path),
        clock=lambda: 0.0,
    )
    footer = report.footer
    print(f"task: {report.task_id}")
    print(f"queries: {footer['total_queries']}  dollars: {footer['total_dollars']:.4f}")
    print(f"valid solutions: {footer['valid_solutions']}")
    print(f"clamped speedup: {footer['clamped_speedup']:.4f}x")

    result = replay_report(load_report(report_path))
    print(f"replay: {'ok' if result.ok else 'DIVERGED'} ({result.steps_compared} steps)")
    for d in result.divergences:
        print(f"  {d.describe()}")

    stats = run_statistics(load_report(report_path))
    stats_path = args.out / "demo-stats.json"
    stats_path.write_text(json.dumps(stats.to_dict(), indent=2, sort_keys=True))
    curve = budget_trajectory(load_report(report_path), AXIS_QUERIES)
    print("speedup by query budget:")
    for point in curve:
        bar = "#" * round(4 * point.speedup)
        print(f"  {int(point.budget):3d} {point.speedup:7.3f}x {bar}")
    print(f"stats written to {stats_path}")


if __name__ == "__main__":
    main()
