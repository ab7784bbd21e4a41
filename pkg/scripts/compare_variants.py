#!/usr/bin/env python3
"""Compare strategy presets on a synthetic landscape with a synthetic model.

Every preset runs against the same randomized token-soup backend: a model
stand-in that proposes ideas, emits candidates sampling the landscape's
markers, and sometimes breaks or fixes them. Scores are geomean clamped
speedups across seeds, so the comparison isolates the search strategy.

Usage: python3 scripts/compare_variants.py [--seeds 5] [--budget 60]
"""

import argparse
import dataclasses

from pike.agents import AgentPool
from pike.analytics import geometric_mean
from pike.config import preset_config, preset_names
from pike.controller import run_search
from pike.evaluation import SyntheticEvaluator, SyntheticLandscape
from pike.library import Task
from pike.testing import TokenSoupBackend

LANDSCAPE = SyntheticLandscape(
    base_runtime_ms=140.0,
    feature_factors={
        "@opt:vectorize": 1.4,
        "@opt:fuse": 1.8,
        "@opt:parallel": 2.5,
        "@opt:cache": 1.15,
        "@opt:inline": 1.05,
    },
    breakage_rules={"@bug:sync": "@fix:sync", "@bug:alloc": "@fix:alloc"},
)

TASK = Task(
    task_id="synthetic-bench",
    source_code="def run(xs):\n    return sum(xs)\n",
    level_tag="level-1",
    entry_metadata={},
    reference_runtime_ms=140.0,
)


def run_preset(name: str, budget: int, seed: int) -> float:
    config = preset_config(name)
    strategy = dataclasses.replace(
        config.strategy, query_budget=budget, rng_seed=seed
    )
    config = dataclasses.replace(config, strategy=strategy)
    backend = TokenSoupBackend(LANDSCAPE, seed=seed)
    report = run_search(
        TASK,
        config,
        AgentPool(optimize=backend),
        SyntheticEvaluator(LANDSCAPE),
        clock=lambda: 0.0,
    )
    return report.footer["clamped_speedup"]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--budget", type=int, default=60)
    parser.add_argument(
        "--presets", nargs="*", default=None, help="Preset names (default: all)."
    )
    args = parser.parse_args()

    names = args.presets if args.presets else preset_names()
    print(f"{'preset':28s} {'geomean speedup':>16s}  per-seed")
    for name in names:
        speedups = [run_preset(name, args.budget, seed) for seed in range(args.seeds)]
        per_seed = " ".join(f"{s:5.2f}" for s in speedups)
        print(f"{name:28s} {geometric_mean(speedups):15.3f}x  {per_seed}")


if __name__ == "__main__":
    main()
