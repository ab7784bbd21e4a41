"""Acceptance suite: the package's core guarantees, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines.
Everything here runs offline against scripted backends and synthetic
evaluation landscapes; no network, no accelerator, no secondary package.
"""

import json
import math
import random
import time
from pathlib import Path

from pike.agents import (
    DEFAULT_PRICING,
    AgentPool,
    TokenUsage,
    build_brainstorm_prompt,
    build_fix_prompt,
    build_mutation_prompt,
    prompt_hash,
    usage_cost,
)
from pike.analytics import budget_trajectory, geometric_mean, loc_changed
from pike.config import BackendConfig, EvaluatorConfig, RunConfig, StrategyConfig
from pike.controller import build_agents, build_evaluator, run_search
from pike.evaluation import SyntheticEvaluator, SyntheticLandscape
from pike.library import Task
from pike.replay import replay_report
from pike.report import RunReport, StepRecord, load_report
from pike.sampling import (
    SamplerConfig,
    Seed,
    branch_counts,
    choose_segment,
    next_generation_pikeb,
)
from pike.testing import TokenSoupBackend
from tests.conftest import make_record, wildcard_script, write_script


def verdict(name: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'}: {name}"
    if detail:
        line += f" [{detail}]"
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# 1. Published-results recomputation
# ---------------------------------------------------------------------------

# Per-task best clamped speedups published for the two evaluation suites
# (30 mid-size model tasks, 14 large-model tasks), H100 vs eager baseline.
# The generational strategy column and the single-island evolutionary
# variant column of the 30-task suite, then the generational column of the
# 14-task suite.
SUITE30_BRANCHING = [
    1.00, 1.03, 1.16, 1.20, 1.23, 1.23, 1.25, 1.33, 1.36, 1.55,
    1.79, 2.01, 2.40, 2.58, 2.58, 2.61, 2.99, 3.00, 3.39, 3.41,
    3.61, 3.70, 4.64, 4.73, 5.48, 6.50, 10.83, 12.26, 12.98, 28.67,
]
SUITE30_EVOLVE_VARIANT = [
    1.05, 1.50, 1.63, 1.00, 3.35, 1.59, 4.12, 1.41, 1.35, 1.00,
    2.29, 2.70, 1.13, 1.68, 3.51, 3.51, 3.45, 2.55, 1.24, 1.44,
    3.87, 1.37, 1.91, 10.91, 4.33, 8.56, 14.59, 15.01, 13.00, 10.34,
]
SUITE14_BRANCHING = [
    1.00, 1.00, 1.18, 1.28, 1.29, 1.30, 1.46, 1.88, 3.06, 4.25,
    6.77, 8.72, 9.41, 10.81,
]


def test_published_geomeans_recompute():
    started = time.monotonic()
    cases = [
        ("30-task suite, branching", SUITE30_BRANCHING, 30, 2.88),
        ("30-task suite, evolve variant", SUITE30_EVOLVE_VARIANT, 30, 2.81),
        ("14-task suite, branching", SUITE14_BRANCHING, 14, 2.57),
    ]
    results = []
    for name, values, count, target in cases:
        assert len(values) == count, name
        got = geometric_mean(values)
        results.append((name, got, target, abs(got - target) <= 0.01))
    elapsed = time.monotonic() - started
    ok = all(r[3] for r in results) and elapsed < 1.0
    detail = "; ".join(f"{n}: {g:.4f} vs {t}" for n, g, t, _ in results)
    verdict("published geomeans recompute within 0.01", ok, detail)


# ---------------------------------------------------------------------------
# 2. Hand-derived trace equivalence
# ---------------------------------------------------------------------------

TRACE_TASK = Task(
    task_id="trace-fixture",
    source_code="def run(xs):\n    return [x * 2 for x in xs]\n",
    level_tag="level-1",
    entry_metadata={"entry_point": "run"},
    reference_runtime_ms=100.0,
)

TRACE_LANDSCAPE = {
    "base_runtime_ms": 100.0,
    "feature_factors": {"@opt:alpha": 1.25, "@opt:beta": 2.0},
    "breakage_rules": {"@bug:crash": "@fix:crash"},
}

TRACE_RESPONSES = {
    "IBA": ["1. idea one\n2. idea two"],
    "COA": [
        "```python\ncand1 @bug:crash\n```",
        "```python\ncand2 @opt:alpha\n```",
        "```python\ncand3 @opt:beta\n```",
        "```python\ncand4 @bug:crash\n```",
    ],
    "EFA": ["```python\ncand1 @bug:crash still\n```"],
}


def run_trace_fixture(tmp_path):
    script_path = write_script(tmp_path / "trace-script.json", TRACE_RESPONSES)
    landscape_path = tmp_path / "trace-landscape.json"
    landscape_path.write_text(json.dumps(TRACE_LANDSCAPE))
    config = RunConfig(
        strategy=StrategyConfig(
            strategy_kind="pike_b",
            population_n=2,
            max_fix_attempts=1,
            top_k=1,
            query_budget=6,
        ),
        # An unpriced model name keeps every dollar counter exactly zero,
        # so the byte comparison pins query charges without float noise.
        backend=BackendConfig(kind="mock", model="scripted", script_path=script_path),
        evaluator=EvaluatorConfig(kind="synthetic", landscape_path=str(landscape_path)),
    ).validated()
    report_path = tmp_path / "trace-report.jsonl"
    run_search(
        TRACE_TASK,
        config,
        build_agents(config),
        build_evaluator(config),
        report_path=str(report_path),
        clock=lambda: 0.0,
    )
    return report_path


def expected_trace_steps():
    """The trace derived by hand from the fixture, field by field.

    Budget 6, two seeds per wave, branch factor 1, one fix attempt.
    Query charges: 1 brainstorm; wave one issues candidate one (broken,
    fix charged and still broken, discarded) and candidate two (valid,
    1.25x); wave two branches twice from the 1.25x solution: one valid
    2.0x candidate, then a broken one whose fix no longer fits the
    budget. Counters are read at write time, so the generate record of
    the fixed pipeline shows the fix query already reserved.
    """
    temp = 0.8
    usage = {"input_tokens": 100, "output_tokens": 200, "estimated": False}
    hash_brainstorm = prompt_hash(build_brainstorm_prompt(TRACE_TASK, 2, temp))
    seed_task_idea1 = Seed(
        seed_code=TRACE_TASK.source_code, source_id=None, idea="idea one"
    )
    seed_task_idea2 = Seed(
        seed_code=TRACE_TASK.source_code, source_id=None, idea="idea two"
    )
    seed_solution1 = Seed(seed_code="cand2 @opt:alpha", source_id=1)
    hash_gen1 = prompt_hash(build_mutation_prompt(TRACE_TASK, seed_task_idea1, temp))
    hash_gen2 = prompt_hash(build_mutation_prompt(TRACE_TASK, seed_task_idea2, temp))
    hash_gen3 = prompt_hash(build_mutation_prompt(TRACE_TASK, seed_solution1, temp))
    hash_fix = prompt_hash(
        build_fix_prompt(
            TRACE_TASK,
            "cand1 @bug:crash",
            "unresolved breakage tokens: @bug:crash",
            temp,
        )
    )
    return [
        StepRecord(
            sequence=1, role="IBA", kind="brainstorm", prompt_hash=hash_brainstorm,
            generation=0, usage=usage, cumulative_queries=1,
        ),
        StepRecord(
            sequence=2, role="COA", kind="generate", prompt_hash=hash_gen1,
            pipeline=1, generation=1, island=0, idea_index=0,
            status="compile_error", attempt=0, usage=usage, cumulative_queries=3,
        ),
        StepRecord(
            sequence=3, role="EFA", kind="fix", prompt_hash=hash_fix,
            pipeline=1, generation=1, island=0, idea_index=0,
            status="compile_error", attempt=1, final=True, discarded=True,
            code="cand1 @bug:crash still", sloc=1, usage=usage,
            cumulative_queries=3,
        ),
        StepRecord(
            sequence=4, role="COA", kind="generate", prompt_hash=hash_gen2,
            pipeline=2, generation=1, island=0, idea_index=1,
            status="ok", runtime_ms=80.0, attempt=0, final=True,
            solution_id=1, objective=1.25, code="cand2 @opt:alpha", sloc=1,
            usage=usage, cumulative_queries=4,
        ),
        StepRecord(
            sequence=5, role="COA", kind="generate", prompt_hash=hash_gen3,
            pipeline=3, generation=2, island=0, seed_source_id=1,
            parent_ids=(1,), status="ok", runtime_ms=50.0, attempt=0,
            final=True, solution_id=2, objective=2.0, code="cand3 @opt:beta",
            sloc=1, usage=usage, cumulative_queries=5,
        ),
        StepRecord(
            sequence=6, role="COA", kind="generate", prompt_hash=hash_gen3,
            pipeline=4, generation=2, island=0, seed_source_id=1,
            parent_ids=(1,), status="compile_error", attempt=0, final=True,
            discarded=True, budget_stopped=True, code="cand4 @bug:crash",
            sloc=1, usage=usage, cumulative_queries=6,
        ),
    ]


EXPECTED_TRACE_FOOTER = {
    "record": "footer",
    "best_solution_id": 2,
    "best_objective": 2.0,
    "clamped_speedup": 2.0,
    "total_queries": 6,
    "total_dollars": 0.0,
    "per_agent": {
        "COA": {"queries": 4, "input_tokens": 400, "output_tokens": 800, "dollars": 0.0},
        "EFA": {"queries": 1, "input_tokens": 100, "output_tokens": 200, "dollars": 0.0},
        "IBA": {"queries": 1, "input_tokens": 100, "output_tokens": 200, "dollars": 0.0},
    },
    "valid_solutions": 2,
    "complete": True,
    "stop_reason": "budget_exhausted",
    "wall_seconds": 0.0,
}


def canonical(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def test_trace_equivalence(tmp_path):
    started = time.monotonic()
    report_path = run_trace_fixture(tmp_path)
    lines = report_path.read_text().splitlines()
    records = [json.loads(line) for line in lines]
    step_lines = [
        line for line, rec in zip(lines, records) if rec.get("record") == "step"
    ]
    expected_lines = [canonical(step.to_dict()) for step in expected_trace_steps()]
    mismatches = [
        i + 1
        for i, (got, want) in enumerate(zip(step_lines, expected_lines))
        if got != want
    ]
    footer_ok = lines[-1] == canonical(EXPECTED_TRACE_FOOTER)
    elapsed = time.monotonic() - started
    ok = (
        len(step_lines) == len(expected_lines)
        and not mismatches
        and footer_ok
        and elapsed < 5.0
    )
    detail = (
        f"{len(step_lines)} steps, mismatches at {mismatches or 'none'}, "
        f"footer {'ok' if footer_ok else 'differs'}, {elapsed:.2f}s"
    )
    verdict("hand-derived trace reproduced byte-exactly", ok, detail)


# ---------------------------------------------------------------------------
# 3. Budget safety under randomized runs
# ---------------------------------------------------------------------------


def random_landscape(rng: random.Random) -> SyntheticLandscape:
    features = {
        f"@opt:f{i}": round(rng.uniform(1.05, 3.0), 3)
        for i in range(rng.randrange(1, 5))
    }
    breakage = {
        f"@bug:b{i}": f"@fix:b{i}" for i in range(rng.randrange(0, 3))
    }
    return SyntheticLandscape(
        base_runtime_ms=rng.uniform(50.0, 200.0),
        feature_factors=features,
        breakage_rules=breakage,
    )


def random_strategy(rng: random.Random, kind: str) -> StrategyConfig:
    explore = rng.uniform(0.0, 0.5)
    exploit = rng.uniform(0.0, 1.0 - explore)
    return StrategyConfig(
        strategy_kind=kind,
        population_n=rng.randrange(1, 6),
        max_fix_attempts=rng.randrange(0, 4),
        top_k=rng.randrange(1, 5),
        query_budget=rng.randrange(0, 13),
        islands=1 if kind == "pike_b" else rng.randrange(1, 4),
        memory_window=rng.choice([None, rng.randrange(1, 8)]),
        archive_capacity=rng.randrange(1, 6),
        sampler=SamplerConfig(explore_ratio=explore, exploit_ratio=exploit),
        crossover_inspirations=0 if kind == "pike_b" else rng.randrange(0, 3),
        parallel_evaluations=rng.randrange(1, 4),
        use_brainstorm=rng.random() < 0.5,
        use_error_fixing=rng.random() < 0.8,
        rng_seed=rng.randrange(1_000_000),
    )


def test_budget_safety_randomized():
    started = time.monotonic()
    rng = random.Random(20260817)
    task = Task(
        task_id="budget-fixture",
        source_code="def run(x):\n    return x\n",
        level_tag="level-1",
        entry_metadata={},
        reference_runtime_ms=None,
    )
    failures = []
    for i in range(1000):
        kind = "pike_b" if i % 2 == 0 else "evolve"
        strategy = random_strategy(rng, kind)
        landscape = random_landscape(rng)
        backend = TokenSoupBackend(
            landscape,
            seed=i,
            break_prob=rng.uniform(0.0, 0.6),
            fix_prob=rng.uniform(0.2, 0.9),
        )
        report = run_search(
            task,
            RunConfig(strategy=strategy),
            AgentPool(optimize=backend),
            SyntheticEvaluator(landscape),
            clock=lambda: 0.0,
        )
        max_attempts = strategy.max_fix_attempts if strategy.use_error_fixing else 0
        if report.footer["total_queries"] > strategy.query_budget:
            failures.append((i, "overspent"))
        if len(report.steps) != report.footer["total_queries"]:
            failures.append((i, "step/query mismatch"))
        if any(s.attempt > max_attempts for s in report.steps):
            failures.append((i, "attempts over cap"))
    elapsed = time.monotonic() - started
    ok = not failures and elapsed < 60.0
    verdict(
        "1000 randomized runs stay within budget and attempt caps",
        ok,
        f"failures={failures[:5]}, {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# 4. Sampler segment statistics
# ---------------------------------------------------------------------------


def test_sampler_segment_frequencies():
    started = time.monotonic()
    sampler = SamplerConfig(explore_ratio=0.2, exploit_ratio=0.7)
    rng = random.Random(4242)
    draws = 100_000
    counts = {"explore": 0, "exploit": 0, "random": 0}
    for _ in range(draws):
        counts[choose_segment(sampler, rng)] += 1
    freqs = {k: v / draws for k, v in counts.items()}
    targets = {"explore": 0.2, "exploit": 0.7, "random": 0.1}
    elapsed = time.monotonic() - started
    ok = (
        all(abs(freqs[k] - targets[k]) <= 0.01 for k in targets) and elapsed < 5.0
    )
    detail = ", ".join(f"{k}={freqs[k]:.4f}" for k in ("explore", "exploit", "random"))
    verdict("sampler frequencies within 0.01 of (0.2, 0.7, 0.1)", ok, detail)


# ---------------------------------------------------------------------------
# 5. Branch-count distribution law
# ---------------------------------------------------------------------------


def test_branch_count_law_exhaustive():
    bad = []
    for n in range(1, 21):
        for k in range(1, n + 1):
            counts = branch_counts(n, k)
            if sum(counts) != n:
                bad.append((n, k, "sum"))
            if any(a < b for a, b in zip(counts, counts[1:])):
                bad.append((n, k, "monotone"))
            if max(counts) - min(counts) > 1:
                bad.append((n, k, "spread"))
            # The seed builder must honor the same counts.
            records = [make_record(i + 1, float(k - i + 1)) for i in range(k)]
            seeds = next_generation_pikeb(records, n, k)
            by_parent = [
                sum(1 for s in seeds if s.source_id == r.solution_id) for r in records
            ]
            if by_parent != counts:
                bad.append((n, k, "seed builder"))
    verdict(
        "branch counts sum to n, rank-monotone, spread <= 1 for all n <= 20",
        not bad,
        f"violations={bad[:5]}",
    )


# ---------------------------------------------------------------------------
# 6. Variant equivalence: constrained evolve vs. generational branching
# ---------------------------------------------------------------------------


def variant_fixture_config(kind: str) -> StrategyConfig:
    # Mutation-only, no parallelism, one island, exploit-only sampling,
    # small memory: the evolve controller constrained to these flags makes
    # the same seed choices as the branching controller (brainstorm off).
    common = dict(
        population_n=1,
        max_fix_attempts=0,
        top_k=1,
        query_budget=8,
        use_brainstorm=False,
        use_error_fixing=False,
        rng_seed=7,
    )
    if kind == "pike_b":
        return StrategyConfig(strategy_kind="pike_b", **common)
    return StrategyConfig(
        strategy_kind="evolve",
        islands=1,
        crossover_inspirations=0,
        parallel_evaluations=1,
        memory_window=4,
        archive_capacity=4,
        sampler=SamplerConfig(explore_ratio=0.0, exploit_ratio=1.0),
        **common,
    )


def test_variant_equivalence():
    landscape = SyntheticLandscape(
        base_runtime_ms=100.0,
        feature_factors={"@opt:alpha": 2.0},
        breakage_rules={"@bug:crash": "@fix:crash"},
    )
    responses = {
        "COA": ["```python\nwinner @opt:alpha\n```"]
        + ["```python\nbroken @bug:crash\n```"] * 7
    }
    task = Task(
        task_id="variant-fixture",
        source_code="def run(x):\n    return x\n",
        level_tag="level-1",
        entry_metadata={},
        reference_runtime_ms=100.0,
    )

    def run_kind(kind: str):
        config = RunConfig(strategy=variant_fixture_config(kind))
        report = run_search(
            task,
            config,
            AgentPool(optimize=wildcard_script(responses)),
            SyntheticEvaluator(landscape),
            clock=lambda: 0.0,
        )
        return [
            (s.role, s.seed_source_id, s.prompt_hash, s.status, s.cumulative_queries)
            for s in report.steps
        ]

    branching = run_kind("pike_b")
    evolve = run_kind("evolve")
    sources = [row[1] for row in branching]
    ok = (
        branching == evolve
        and len(branching) == 8
        and sources == [None] + [1] * 7
    )
    verdict(
        "constrained evolve makes the branching strategy's seed choices",
        ok,
        f"sources={sources}",
    )


# ---------------------------------------------------------------------------
# 7. Trajectory properties on random reports
# ---------------------------------------------------------------------------


def random_trajectory_report(rng: random.Random) -> tuple[RunReport, list]:
    events = []
    cq, cd = 0, 0.0
    for _ in range(rng.randrange(0, 12)):
        cq += rng.randrange(1, 4)
        cd += rng.random()
        valid = rng.random() < 0.6
        events.append((cq, cd, round(rng.uniform(0.3, 8.0), 3) if valid else None))
    steps = tuple(
        StepRecord(
            sequence=i + 1, role="COA", kind="generate", prompt_hash="h",
            pipeline=i + 1, final=True,
            status="ok" if obj is not None else "runtime_error",
            objective=obj, discarded=obj is None,
            solution_id=(i + 1) if obj is not None else None,
            cumulative_queries=q, cumulative_dollars=d,
        )
        for i, (q, d, obj) in enumerate(events)
    )
    total_queries = (events[-1][0] if events else 0) + rng.randrange(0, 3)
    footer = {
        "best_objective": max((e[2] for e in events if e[2] is not None), default=1.0),
        "total_queries": total_queries,
        "total_dollars": (events[-1][1] if events else 0.0) + rng.random(),
        "complete": True,
    }
    header = {"task": {"task_id": "r", "source_code": ""}}
    return RunReport(header=header, steps=steps, footer=footer), events


def test_trajectory_properties_random_reports():
    rng = random.Random(99)
    bad = []
    for i in range(100):
        report, events = random_trajectory_report(rng)
        points = budget_trajectory(report, "queries")
        speeds = [p.speedup for p in points]
        if speeds != sorted(speeds):
            bad.append((i, "not monotone"))
        if points[0].budget != 0.0 or points[0].speedup != 1.0:
            # A zero-cost solution would be a fixture bug, not a finding.
            bad.append((i, "zero-budget point"))
        clamped_best = max(
            [1.0] + [obj for _, _, obj in events if obj is not None]
        )
        if points[-1].speedup != clamped_best:
            bad.append((i, "final point"))
        # Brute-force scan at every grid point.
        for p in points:
            reachable = [o for q, _, o in events if o is not None and q <= p.budget]
            want = max(1.0, max(reachable) if reachable else 1.0)
            if p.speedup != want:
                bad.append((i, f"brute force at {p.budget}"))
                break
    verdict(
        "100 random trajectories monotone, 1.0 at zero, end at clamped best",
        not bad,
        f"violations={bad[:5]}",
    )


# ---------------------------------------------------------------------------
# 8. Line-diff oracle
# ---------------------------------------------------------------------------


def lcs_length(a: list, b: list) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[len(b)]


def test_line_diff_matches_lcs_oracle():
    rng = random.Random(1234)
    vocab = [f"stmt_{i}()" for i in range(12)]
    bad = []
    for i in range(200):
        before = "\n".join(rng.choice(vocab) for _ in range(rng.randrange(0, 40)))
        after = "\n".join(rng.choice(vocab) for _ in range(rng.randrange(0, 40)))
        got = loc_changed(before, after)
        a, b = before.splitlines(), after.splitlines()
        want = len(a) + len(b) - 2 * lcs_length(a, b)
        if got != want:
            bad.append((i, got, want))
    verdict(
        "line diff equals quadratic LCS oracle on 200 random pairs",
        not bad,
        f"violations={bad[:5]}",
    )


# ---------------------------------------------------------------------------
# 9. Replay determinism
# ---------------------------------------------------------------------------


def test_replay_zero_divergence(tmp_path):
    repo_demo = Path(__file__).resolve().parent.parent / "fixtures" / "demo"
    reports = []

    # Fixture one: the hand-traced branching run.
    reports.append(run_trace_fixture(tmp_path))

    # Fixture two: the repo demo (three generations, fixes, discards).
    demo_script = repo_demo / "script.json"
    demo_landscape = repo_demo / "landscape.json"
    demo_task = Task(
        task_id="demo-replay",
        source_code=(repo_demo / "task" / "model.py").read_text(),
        level_tag="level-1",
        entry_metadata={},
        reference_runtime_ms=125.0,
    )
    demo_config = RunConfig(
        strategy=StrategyConfig(
            strategy_kind="pike_b",
            population_n=4,
            max_fix_attempts=1,
            top_k=2,
            query_budget=14,
        ),
        backend=BackendConfig(kind="mock", script_path=str(demo_script)),
        evaluator=EvaluatorConfig(kind="synthetic", landscape_path=str(demo_landscape)),
    ).validated()
    demo_report = tmp_path / "demo-report.jsonl"
    run_search(
        demo_task,
        demo_config,
        build_agents(demo_config),
        build_evaluator(demo_config),
        report_path=str(demo_report),
        clock=lambda: 0.0,
    )
    reports.append(demo_report)

    # Fixture three: a single-worker evolutionary run with stochastic
    # seed selection driven by the recorded RNG seed.
    evolve_script = write_script(
        tmp_path / "evolve-script.json",
        {"COA": [f"```python\nc{i} @opt:alpha\n```" for i in range(5)]},
    )
    evolve_landscape = tmp_path / "evolve-landscape.json"
    evolve_landscape.write_text(json.dumps(TRACE_LANDSCAPE))
    evolve_config = RunConfig(
        strategy=StrategyConfig(
            strategy_kind="evolve",
            population_n=5,
            max_fix_attempts=1,
            query_budget=5,
            islands=2,
            memory_window=3,
            archive_capacity=2,
            sampler=SamplerConfig(explore_ratio=0.3, exploit_ratio=0.5),
            use_brainstorm=False,
            rng_seed=3,
        ),
        backend=BackendConfig(kind="mock", script_path=evolve_script),
        evaluator=EvaluatorConfig(
            kind="synthetic", landscape_path=str(evolve_landscape)
        ),
    ).validated()
    evolve_report = tmp_path / "evolve-report.jsonl"
    run_search(
        TRACE_TASK,
        evolve_config,
        build_agents(evolve_config),
        build_evaluator(evolve_config),
        report_path=str(evolve_report),
        clock=lambda: 0.0,
    )
    reports.append(evolve_report)

    outcomes = []
    for path in reports:
        result = replay_report(load_report(path))
        outcomes.append((path.name, result.steps_compared, len(result.divergences)))
    ok = all(c == 0 for _, _, c in outcomes) and all(n > 0 for _, n, _ in outcomes)
    verdict(
        "scripted single-worker reports replay with zero divergence",
        ok,
        "; ".join(f"{name}: {n} steps, {c} diffs" for name, n, c in outcomes),
    )


# ---------------------------------------------------------------------------
# 10. Pricing arithmetic
# ---------------------------------------------------------------------------


def test_pricing_reproduces_published_rates():
    pro = DEFAULT_PRICING["gemini-2.5-pro"]
    flash = DEFAULT_PRICING["gemini-2.5-flash"]
    pro_input_only = usage_cost(TokenUsage(1_000_000, 0), pro)
    flash_round_trip = usage_cost(TokenUsage(1_000_000, 1_000_000), flash)
    ok = pro_input_only == 1.25 and flash_round_trip == 2.80
    verdict(
        "pricing: 1M pro input = $1.25, 1M+1M flash = $2.80, exactly",
        ok,
        f"pro={pro_input_only!r}, flash={flash_round_trip!r}",
    )
