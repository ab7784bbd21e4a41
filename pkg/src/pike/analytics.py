"""Metrics over runs and reports.

Everything here is a pure function of report data (plus an optional
embedding provider): clamped speedups and their geometric mean, best-so-far
trajectories against query or dollar budgets, minimal line-diff sizes,
source-line counts, embedding cosine similarity, and per-run summary
statistics suitable for cross-task aggregation.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .report import RunReport, StepRecord


class AnalyticsError(ValueError):
    """Raised on domain errors: empty inputs, nonpositive values, and such."""


# ---------------------------------------------------------------------------
# Speedups
# ---------------------------------------------------------------------------


def clamped_speedup(eager_ms: float, candidate_ms: float) -> float:
    """Speedup of a candidate over the eager baseline, floored at 1.

    The floor reflects that the original program is always available, so a
    slowdown never counts below parity.
    """
    if eager_ms <= 0 or candidate_ms <= 0:
        raise AnalyticsError("runtimes must be positive")
    return max(1.0, eager_ms / candidate_ms)


def geometric_mean(values: Iterable[float]) -> float:
    values = list(values)
    if not values:
        raise AnalyticsError("geometric mean of an empty sequence")
    logs = []
    for v in values:
        if v <= 0:
            raise AnalyticsError(f"geometric mean needs positive values, got {v}")
        logs.append(math.log(v))
    return math.exp(sum(logs) / len(logs))


# ---------------------------------------------------------------------------
# Budget trajectories
# ---------------------------------------------------------------------------

AXIS_QUERIES = "queries"
AXIS_DOLLARS = "dollars"
DEFAULT_DOLLAR_GRID_POINTS = 200


@dataclass(frozen=True)
class TrajectoryPoint:
    budget: float
    speedup: float


def _finalization_events(report: RunReport, axis: str) -> list[tuple[float, float]]:
    """(cost at finalization, objective) per valid solution, cost-sorted.

    A solution's cost is the run's cumulative spend at the moment its
    pipeline finished, which charges its own fix queries to it along with
    everything else settled so far.
    """
    if axis not in (AXIS_QUERIES, AXIS_DOLLARS):
        raise AnalyticsError(f"unknown trajectory axis: {axis!r}")
    events = []
    for step in report.final_steps():
        if step.solution_id is None or step.objective is None:
            continue
        cost = (
            float(step.cumulative_queries)
            if axis == AXIS_QUERIES
            else step.cumulative_dollars
        )
        events.append((cost, step.objective))
    events.sort(key=lambda e: e[0])
    return events


def default_grid(report_or_reports, axis: str, points: int = DEFAULT_DOLLAR_GRID_POINTS) -> list[float]:
    """Budget grid from zero to the largest spend among the reports."""
    reports = (
        [report_or_reports]
        if isinstance(report_or_reports, RunReport)
        else list(report_or_reports)
    )
    if not reports:
        raise AnalyticsError("need at least one report")
    if axis == AXIS_QUERIES:
        top = max(r.total_queries for r in reports)
        return [float(q) for q in range(top + 1)]
    if axis == AXIS_DOLLARS:
        top = max(r.total_dollars for r in reports)
        if points < 2:
            raise AnalyticsError("dollar grids need at least two points")
        return [top * i / (points - 1) for i in range(points)]
    raise AnalyticsError(f"unknown trajectory axis: {axis!r}")


def budget_trajectory(
    report: RunReport, axis: str = AXIS_QUERIES, grid: Sequence[float] | None = None
) -> list[TrajectoryPoint]:
    """Best clamped speedup reachable at each budget value.

    The curve is non-decreasing, starts at 1.0 for a zero budget, and its
    last point (on the default grid) equals the run's final clamped best.
    """
    events = _finalization_events(report, axis)
    if grid is None:
        grid = default_grid(report, axis)
    else:
        grid = [float(g) for g in grid]
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise AnalyticsError("trajectory grid must be sorted ascending")
        if grid and grid[0] < 0:
            raise AnalyticsError("trajectory budgets must be non-negative")
    points = []
    best: float | None = None
    i = 0
    for budget in grid:
        while i < len(events) and events[i][0] <= budget:
            value = events[i][1]
            best = value if best is None or value > best else best
            i += 1
        points.append(TrajectoryPoint(budget=budget, speedup=max(1.0, best or 1.0)))
    return points


def geomean_trajectory(
    reports: Sequence[RunReport],
    axis: str = AXIS_QUERIES,
    grid: Sequence[float] | None = None,
) -> list[TrajectoryPoint]:
    """Cross-task curve: geomean of per-task best speedups at each budget.

    The budget is per task: a point at budget g spends up to g on every
    task independently, so the whole-suite spend at that point is g times
    the number of reports.
    """
    if not reports:
        raise AnalyticsError("need at least one report")
    if grid is None:
        grid = default_grid(reports, axis)
    curves = [budget_trajectory(r, axis, grid) for r in reports]
    out = []
    for idx, budget in enumerate(grid):
        out.append(
            TrajectoryPoint(
                budget=float(budget),
                speedup=geometric_mean(c[idx].speedup for c in curves),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Line diffs
# ---------------------------------------------------------------------------


def loc_changed(before: str, after: str) -> int:
    """Size of the minimal line edit script between two programs.

    Counts added plus deleted lines of a shortest edit script (no modify
    operation: a changed line is one deletion plus one addition). Computed
    with the greedy shortest-edit-distance algorithm, linear space.
    """
    a = before.splitlines()
    b = after.splitlines()
    # Trim common prefix and suffix; they never enter a minimal script.
    start = 0
    while start < len(a) and start < len(b) and a[start] == b[start]:
        start += 1
    end_a, end_b = len(a), len(b)
    while end_a > start and end_b > start and a[end_a - 1] == b[end_b - 1]:
        end_a -= 1
        end_b -= 1
    a = a[start:end_a]
    b = b[start:end_b]
    if not a or not b:
        return len(a) + len(b)
    # Intern lines so the inner loop compares ints.
    table: dict[str, int] = {}
    xs = [table.setdefault(line, len(table)) for line in a]
    ys = [table.setdefault(line, len(table)) for line in b]
    return _edit_distance(xs, ys)


def _edit_distance(a: list[int], b: list[int]) -> int:
    n, m = len(a), len(b)
    max_d = n + m
    offset = max_d
    v = [0] * (2 * max_d + 2)
    for d in range(max_d + 1):
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v[offset + k - 1] < v[offset + k + 1]):
                x = v[offset + k + 1]
            else:
                x = v[offset + k - 1] + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[offset + k] = x
            if x >= n and y >= m:
                return d
    return max_d


# ---------------------------------------------------------------------------
# Source line counting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LanguageProfile:
    """Comment syntax used to strip non-source lines."""

    line_comment_prefixes: tuple[str, ...]
    block_comment_delims: tuple[tuple[str, str], ...]


LANGUAGE_PROFILES: dict[str, LanguageProfile] = {
    "python": LanguageProfile(("#",), (('"""', '"""'), ("'''", "'''"))),
    "c": LanguageProfile(("//",), (("/*", "*/"),)),
    "cuda": LanguageProfile(("//",), (("/*", "*/"),)),
}


def count_sloc(code: str, language: str = "python") -> int:
    """Source lines of code: total lines minus blank and comment lines.

    Block comments may span lines or share a line with code; a line counts
    when any non-comment, non-blank text remains. Comment markers inside
    string literals are not recognized, a known approximation shared with
    the usual line-based counters.
    """
    try:
        profile = LANGUAGE_PROFILES[language]
    except KeyError:
        raise AnalyticsError(f"unknown language profile: {language!r}") from None
    count = 0
    in_block = False
    close_delim = ""
    for line in code.splitlines():
        effective = []
        pos = 0
        while pos < len(line):
            if in_block:
                idx = line.find(close_delim, pos)
                if idx < 0:
                    pos = len(line)
                else:
                    pos = idx + len(close_delim)
                    in_block = False
                continue
            next_line_comment = min(
                (
                    i
                    for i in (line.find(p, pos) for p in profile.line_comment_prefixes)
                    if i >= 0
                ),
                default=-1,
            )
            next_block: tuple[int, tuple[str, str]] | None = None
            for delims in profile.block_comment_delims:
                i = line.find(delims[0], pos)
                if i >= 0 and (next_block is None or i < next_block[0]):
                    next_block = (i, delims)
            if next_line_comment >= 0 and (
                next_block is None or next_line_comment < next_block[0]
            ):
                effective.append(line[pos:next_line_comment])
                pos = len(line)
            elif next_block is not None:
                effective.append(line[pos : next_block[0]])
                in_block = True
                close_delim = next_block[1][1]
                pos = next_block[0] + len(next_block[1][0])
            else:
                effective.append(line[pos:])
                pos = len(line)
        if "".join(effective).strip():
            count += 1
    return count


# ---------------------------------------------------------------------------
# Embeddings and similarity
# ---------------------------------------------------------------------------


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise AnalyticsError(f"embedding shapes differ: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise AnalyticsError("cosine similarity of a zero vector")
    return float(np.dot(a, b) / (norm_a * norm_b))


_TOKEN_RE = re.compile(r"\w+")


class HashedTokenEmbedding:
    """Cheap deterministic embedding: a hashed bag-of-tokens vector.

    Exists so similarity analytics can run offline and in tests; real
    studies plug in a remote embedding provider instead.
    """

    kind = "hashed-bag"

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise AnalyticsError("embedding dimension must be >= 1")
        self.dim = dim

    def bucket(self, token: str) -> int:
        digest = hashlib.md5(token.encode("utf-8")).hexdigest()
        return int(digest[:8], 16) % self.dim

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=float)
        for token in _TOKEN_RE.findall(text):
            vec[self.bucket(token)] += 1.0
        return vec


class RemoteEmbeddingProvider:
    """Client for an OpenAI-compatible embeddings endpoint."""

    kind = "remote"

    def __init__(
        self,
        base_url: str,
        model: str = "text-embedding-3-large",
        api_key: str | None = None,
        timeout_s: float = 60.0,
        session=None,
    ):
        if session is None:
            import requests

            session = requests.Session()
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s
        self._session = session

    def embed(self, text: str) -> np.ndarray:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        resp = self._session.post(
            f"{self.base_url}/embeddings",
            json={"model": self.model, "input": [text]},
            headers=headers,
            timeout=self.timeout_s,
        )
        resp.raise_for_status()
        return np.asarray(resp.json()["data"][0]["embedding"], dtype=float)


# ---------------------------------------------------------------------------
# Per-run statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunStatistics:
    """Summary of one report, shaped for cross-task aggregation."""

    task_id: str
    total_candidates: int
    valid_candidates: int
    percent_working: float | None
    mean_fix_attempts: float | None
    mean_sloc: float | None
    mean_loc_changed: float | None
    mean_cosine_similarity: float | None
    similarity_pairs_skipped: int
    steps_within_step_budget: int
    step_budget_dollars: float
    total_queries: int
    total_dollars: float
    best_objective: float
    clamped_speedup: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _seed_code(report: RunReport, step: StepRecord) -> str:
    source_id = step.seed_source_id
    return report.solution_code(source_id if source_id is not None else 0)


def run_statistics(
    report: RunReport,
    *,
    embedder=None,
    step_budget_dollars: float = 25.0,
    language: str = "python",
) -> RunStatistics:
    """Compute one report's summary statistics.

    Percent working counts valid candidates over all candidates generated.
    Mean fix attempts averages over candidates whose first evaluation
    failed. Line counts, diffs, and similarity are computed for valid
    solutions against the seed they started from; similarity needs an
    embedder and records how many pairs had to be skipped on provider
    errors.
    """
    pipelines = report.pipelines()
    finals = {pid: steps[-1] for pid, steps in pipelines.items()}
    total = len(pipelines)
    valid = [f for f in finals.values() if f.solution_id is not None]

    broken_attempts = [
        finals[pid].attempt
        for pid, steps in pipelines.items()
        if steps[0].status is not None and steps[0].status != "ok"
    ]

    sloc_values = [
        float(f.sloc)
        for f in finals.values()
        if f.sloc is not None
    ]

    loc_values: list[float] = []
    similarities: list[float] = []
    skipped = 0
    for f in sorted(valid, key=lambda s: s.sequence):
        if f.code is None:
            continue
        seed_code = _seed_code(report, f)
        loc_values.append(float(loc_changed(seed_code, f.code)))
        if embedder is not None:
            try:
                similarities.append(
                    cosine_similarity(embedder.embed(seed_code), embedder.embed(f.code))
                )
            except Exception:
                skipped += 1

    def mean(values: list[float]) -> float | None:
        return sum(values) / len(values) if values else None

    within = sum(
        1 for f in finals.values() if f.cumulative_dollars <= step_budget_dollars
    )

    return RunStatistics(
        task_id=report.task_id,
        total_candidates=total,
        valid_candidates=len(valid),
        percent_working=(100.0 * len(valid) / total) if total else None,
        mean_fix_attempts=mean([float(x) for x in broken_attempts]),
        mean_sloc=mean(sloc_values),
        mean_loc_changed=mean(loc_values),
        mean_cosine_similarity=mean(similarities),
        similarity_pairs_skipped=skipped,
        steps_within_step_budget=within,
        step_budget_dollars=step_budget_dollars,
        total_queries=report.total_queries,
        total_dollars=report.total_dollars,
        best_objective=report.footer["best_objective"],
        clamped_speedup=report.footer["clamped_speedup"],
    )


def histogram(values: Sequence[float], bin_edges: Sequence[float]) -> list[int]:
    """Counts per bin; bins are right-open except the last, which is closed."""
    edges = [float(e) for e in bin_edges]
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise AnalyticsError("bin edges must be strictly increasing, length >= 2")
    counts = [0] * (len(edges) - 1)
    for v in values:
        if v < edges[0] or v > edges[-1]:
            continue
        if v == edges[-1]:
            counts[-1] += 1
            continue
        lo, hi = 0, len(edges) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if v < edges[mid]:
                hi = mid
            else:
                lo = mid
        counts[lo] += 1
    return counts
