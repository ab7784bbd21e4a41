#!/usr/bin/env python3
"""Regenerate the demo fixture: task, landscape, response script, config.

The demo is a fully offline run: a scripted backend supplies every model
response and a synthetic landscape maps candidate code to runtimes by the
optimization markers it carries. Running it exercises the whole pipeline
(brainstorm, generate, fix, branch, report, replay) with zero network use.

Usage: python3 scripts/make_demo_fixture.py [--root fixtures/demo]
"""

import argparse
import json
from pathlib import Path

TASK_SOURCE = '''\
import math


def run(xs):
    total = 0.0
    for x in xs:
        total += math.sin(x) * math.cos(x)
    return total


def get_inputs():
    return [i / 1000.0 for i in range(10000)]
'''

TASK_MANIFEST = """\
task_id: demo-trig-reduce
level_tag: level-1
entry_metadata:
  entry_point: run
  inputs: get_inputs
reference_runtime_ms: 125.0
source_file: model.py
"""

# Markers the synthetic landscape recognizes in candidate code. Factors
# multiply, so stacking markers compounds the speedup.
LANDSCAPE = {
    "base_runtime_ms": 125.0,
    "feature_factors": {
        "@opt:vectorize": 1.4,
        "@opt:fuse": 1.8,
        "@opt:parallel": 2.5,
        "@opt:cache": 1.15,
    },
    "breakage_rules": {
        "@bug:sync": "@fix:sync",
        "@bug:alloc": "@fix:alloc",
    },
}

IDEAS = """\
Here are some directions worth exploring:

1. Vectorize the inner loop with batch array operations.
2. Fuse the two trig evaluations into a single pass.
3. Parallelize the reduction across worker threads.
4. Cache repeated subexpressions between iterations.
"""


def candidate(markers: str, body_note: str) -> str:
    """A plausible optimized variant carrying the given landscape markers."""
    code = f'''\
import math

# applied: {markers}
# {body_note}


def run(xs):
    total = 0.0
    for x in xs:
        total += 0.5 * math.sin(2.0 * x)
    return total


def get_inputs():
    return [i / 1000.0 for i in range(10000)]
'''
    return f"Here is the improved program.\n```python\n{code}```"


def entry(role, ordinal, text, input_tokens, output_tokens):
    return {
        "role": role,
        "prompt_hash": "*",
        "ordinal": ordinal,
        "response_text": text,
        "input_tokens": input_tokens,
        "output_tokens": output_tokens,
    }


def build_script() -> dict:
    coa = [
        # Generation 1: one idea each, mixed quality, two breakages.
        candidate("@opt:vectorize", "batch the trig calls"),
        candidate("@bug:sync", "threads race on the accumulator"),
        candidate("@opt:cache", "memoize repeated angles"),
        candidate("@bug:alloc", "buffer reuse gone wrong"),
        # Generation 2: branches from the two best solutions so far.
        candidate("@fix:sync @opt:fuse @opt:parallel", "fused, now with a thread pool"),
        candidate("@opt:fuse @opt:cache", "fuse plus memoization"),
        candidate("@opt:vectorize @opt:parallel", "batched and threaded"),
        candidate("@bug:alloc", "another bad buffer experiment"),
        # Generation 3: branches from the two best again.
        candidate("@opt:parallel @opt:fuse @opt:cache", "everything but vectorize"),
        candidate("@opt:parallel @opt:fuse @opt:vectorize", "the full stack"),
    ]
    efa = [
        candidate("@fix:sync @opt:fuse", "lock per worker, fused loops"),
        candidate("@bug:alloc", "fix attempt that repeats the mistake"),
        candidate("@fix:alloc @opt:vectorize @opt:cache", "preallocate once"),
    ]
    entries = [entry("IBA", 0, IDEAS, 1100, 160)]
    entries += [
        entry("COA", i, text, 1400 + 10 * i, 420 + 5 * i) for i, text in enumerate(coa)
    ]
    entries += [
        entry("EFA", i, text, 1700 + 10 * i, 430 + 5 * i) for i, text in enumerate(efa)
    ]
    return {"entries": entries}


CONFIG = """\
strategy:
  strategy_kind: pike_b
  population_n: 4
  max_fix_attempts: 1
  top_k: 2
  query_budget: 14
  rng_seed: 0
backend:
  kind: mock
  model: gemini-2.5-pro
  script_path: {root}/script.json
evaluator:
  kind: synthetic
  landscape_path: {root}/landscape.json
"""


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default="fixtures/demo", type=Path)
    args = parser.parse_args()

    root = args.root
    (root / "task").mkdir(parents=True, exist_ok=True)
    (root / "task" / "task.yaml").write_text(TASK_MANIFEST)
    (root / "task" / "model.py").write_text(TASK_SOURCE)
    (root / "landscape.json").write_text(json.dumps(LANDSCAPE, indent=2) + "\n")
    (root / "script.json").write_text(json.dumps(build_script(), indent=1) + "\n")
    (root / "config.yaml").write_text(CONFIG.format(root=root))
    print(f"demo fixture written under {root}/")


if __name__ == "__main__":
    main()
