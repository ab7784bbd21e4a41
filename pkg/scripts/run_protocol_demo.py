#!/usr/bin/env python3
"""Run a search against the real evaluation worker over the wire protocol.

The language-model side stays scripted and deterministic, but runtimes
are measured for real: candidates are shipped as NDJSON evaluate requests
to a worker child process, which compiles them, checks their outputs
against the original program under the elementwise tolerance, and times
them with warmup plus mean-of-many-runs. The task recomputes a polynomial
sixty times per element, so genuine speedups are there for the taking.

Requires the worker package:

    pip install -e worker/ --no-build-isolation

Usage: python3 scripts/run_protocol_demo.py [--out out/proto]

Measured runtimes vary run to run, which is exactly the point: this demo
shows live measurement, so unlike the synthetic demo its report is not
byte-replayable.
"""

import argparse
import importlib.util
import json
import sys
from pathlib import Path

from pike.config import BackendConfig, EvaluatorConfig, RunConfig, StrategyConfig
from pike.controller import build_agents, build_evaluator, run_search
from pike.library import load_task
from pike.report import load_report

TASK_MANIFEST = """\
task_id: poly-repeat
level_tag: demo
timing:
  warmup_runs: 1
  min_runs: 5
  min_total_ms: 10.0
source_file: model.py
"""

TASK_SOURCE = '''\
import random


class Model:
    """Degree-3 polynomial, wastefully recomputed sixty times per element."""

    COEFFS = (0.3, -1.2, 0.8, 2.0)

    def __call__(self, xs):
        out = []
        for x in xs:
            value = 0.0
            for _ in range(60):
                value = sum(c * x**i for i, c in enumerate(self.COEFFS))
            out.append(value)
        return out


def get_inputs():
    return [[random.uniform(-2.0, 2.0) for _ in range(256)]]
'''

PLAIN_CANDIDATE = '''\
class ModelNew:
    COEFFS = (0.3, -1.2, 0.8, 2.0)

    def __call__(self, xs):
        return [sum(c * x**i for i, c in enumerate(self.COEFFS)) for x in xs]
'''

BROKEN_HORNER = '''\
class ModelNew:
    COEFFS = (0.3, -1.2, 0.8, 2.0)

    def __call__(self, xs)
        out = []
        for x in xs:
            value = 0.0
            for c in reversed(self.COEFFS):
                value = value * x + c
            out.append(value)
        return out
'''

FIXED_HORNER = BROKEN_HORNER.replace("def __call__(self, xs)\n", "def __call__(self, xs):\n")

FOLDED_CANDIDATE = '''\
class ModelNew:
    def __call__(self, xs):
        return [0.3 + x * (-1.2 + x * (0.8 + x * 2.0)) for x in xs]
'''

UNROLLED_CANDIDATE = '''\
class ModelNew:
    COEFFS = (0.3, -1.2, 0.8, 2.0)

    def __call__(self, xs):
        c0, c1, c2, c3 = self.COEFFS
        return [c0 + c1 * x + c2 * x * x + c3 * x * x * x for x in xs]
'''

IDEAS = """\
1. Compute each element once instead of sixty times.
2. Evaluate the polynomial with Horner's scheme.
"""


def fenced(code, note):
    return f"{note}\n```python\n{code}```"


def entry(role, ordinal, text):
    return {
        "role": role,
        "prompt_hash": "*",
        "ordinal": ordinal,
        "response_text": text,
        "input_tokens": 1200 + 10 * ordinal,
        "output_tokens": 300 + 5 * ordinal,
    }


def build_script():
    coa = [
        fenced(PLAIN_CANDIDATE, "Drop the redundant recomputation."),
        fenced(BROKEN_HORNER, "Horner's scheme cuts the multiplies."),
        fenced(FOLDED_CANDIDATE, "Fold the coefficients into the expression."),
        fenced(UNROLLED_CANDIDATE, "Unrolled powers, no generator overhead."),
    ]
    efa = [fenced(FIXED_HORNER, "The def line was missing its colon.")]
    entries = [entry("IBA", 0, IDEAS)]
    entries += [entry("COA", i, text) for i, text in enumerate(coa)]
    entries += [entry("EFA", i, text) for i, text in enumerate(efa)]
    return {"entries": entries}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/proto", type=Path)
    args = parser.parse_args()

    if importlib.util.find_spec("pike_worker") is None:
        sys.exit(
            "the evaluation worker is not installed; run: "
            "pip install -e worker/ --no-build-isolation"
        )

    out = args.out
    task_dir = out / "tasks" / "poly-repeat"
    task_dir.mkdir(parents=True, exist_ok=True)
    (task_dir / "task.yaml").write_text(TASK_MANIFEST)
    (task_dir / "model.py").write_text(TASK_SOURCE)
    script_path = out / "script.json"
    script_path.write_text(json.dumps(build_script(), indent=2) + "\n")
    report_path = out / "proto-report.jsonl"

    config = RunConfig(
        strategy=StrategyConfig(
            population_n=2,
            max_fix_attempts=1,
            top_k=1,
            query_budget=6,
            rng_seed=0,
        ),
        backend=BackendConfig(kind="mock", model="scripted", script_path=str(script_path)),
        evaluator=EvaluatorConfig(
            kind="protocol",
            cmd=(sys.executable, "-m", "pike_worker", "--tasks", str(out / "tasks")),
            timeout_s=60.0,
        ),
    ).validated()

    task = load_task(task_dir)
    evaluator = build_evaluator(config)
    try:
        report = run_search(
            task,
            config,
            build_agents(config),
            evaluator,
            report_path=str(report_path),
        )
    finally:
        evaluator.close()

    footer = report.footer
    print(f"task: {report.task_id}")
    reference_ms = report.header["task"]["reference_runtime_ms"]
    print(f"reference runtime (measured): {reference_ms:.3f} ms")
    print(f"queries charged: {footer['total_queries']}")
    print("solutions:")
    for step in report.steps:
        if step.final and step.status == "ok":
            print(
                f"  solution {step.solution_id}: {step.runtime_ms:.3f} ms "
                f"-> {step.objective:.1f}x"
            )
    print(f"best clamped speedup: {footer['clamped_speedup']:.1f}x")
    best = report.solution_code(footer["best_solution_id"])
    print("winning candidate:")
    for line in best.splitlines():
        print(f"    {line}")
    # Round-trip sanity: the written report loads back cleanly.
    reloaded = load_report(report_path)
    assert reloaded.footer["total_queries"] == footer["total_queries"]
    print(f"report written to {report_path}")


if __name__ == "__main__":
    main()
