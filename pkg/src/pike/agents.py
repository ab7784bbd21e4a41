"""LLM agent layer: prompt construction, model backends, and token pricing.

Three agent roles share one invocation surface. The brainstorm agent proposes
optimization ideas for a task, the optimizer agent rewrites a program (from
the task itself or from a prior solution, optionally steered by an idea or by
inspiration programs), and the fixer agent repairs a broken candidate given
the error output. Every invocation goes through a backend object so runs can
swap a scripted mock for a remote endpoint without touching the controller.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import threading
import time
from dataclasses import dataclass, field

ROLE_BRAINSTORM = "IBA"
ROLE_OPTIMIZE = "COA"
ROLE_FIX = "EFA"
ROLES = (ROLE_BRAINSTORM, ROLE_OPTIMIZE, ROLE_FIX)

PROMPT_VERSION = 1


class AgentError(Exception):
    """Raised when a backend cannot produce a response."""


@dataclass(frozen=True)
class TokenUsage:
    """Token counts for one model call.

    ``estimated`` marks usage reconstructed from text length because the
    backend did not report real counts.
    """

    input_tokens: int
    output_tokens: int
    estimated: bool = False

    def __post_init__(self) -> None:
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be non-negative")

    def to_dict(self) -> dict:
        return {
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "estimated": self.estimated,
        }


@dataclass(frozen=True)
class PricingEntry:
    """Dollar rates per one million tokens for a model."""

    input_per_million: float
    output_per_million: float

    def __post_init__(self) -> None:
        if self.input_per_million < 0 or self.output_per_million < 0:
            raise ValueError("prices must be non-negative")


# Published rates for the models used in the reference experiments.
DEFAULT_PRICING: dict[str, PricingEntry] = {
    "gemini-2.5-pro": PricingEntry(1.25, 10.00),
    "gemini-2.5-flash": PricingEntry(0.30, 2.50),
}


def usage_cost(usage: TokenUsage, pricing: PricingEntry) -> float:
    """Dollar cost of one call: tokens times per-million rate on each side."""
    return (
        usage.input_tokens * pricing.input_per_million / 1_000_000
        + usage.output_tokens * pricing.output_per_million / 1_000_000
    )


def estimate_usage(prompt_text: str, response_text: str) -> TokenUsage:
    """Rough char/4 token estimate, flagged so reports can distinguish it."""
    return TokenUsage(
        input_tokens=math.ceil(len(prompt_text) / 4),
        output_tokens=math.ceil(len(response_text) / 4),
        estimated=True,
    )


@dataclass(frozen=True)
class PromptSpec:
    """A fully rendered prompt plus the sampling knobs used to send it."""

    role: str
    text: str
    temperature: float = 0.8

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown agent role: {self.role!r}")


def prompt_hash(spec: PromptSpec) -> str:
    """Stable content hash used to key scripted responses and replay checks."""
    h = hashlib.sha256()
    h.update(spec.role.encode("utf-8"))
    h.update(b"\x00")
    h.update(spec.text.encode("utf-8"))
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Prompt construction
#
# Templates are versioned via PROMPT_VERSION and recorded in report headers;
# any wording change must bump the version because replay compares hashes.
# ---------------------------------------------------------------------------


def _problem_statement(task) -> str:
    return (
        f"Task {task.task_id} ({task.level_tag}): produce an optimized drop-in "
        "replacement for the program below. The replacement must produce "
        "outputs equivalent to the original and should run as fast as possible."
    )


def _code_block(code: str) -> str:
    body = code if code.endswith("\n") else code + "\n"
    return f"```\n{body}```"


def build_brainstorm_prompt(task, n_ideas: int, temperature: float = 0.8) -> PromptSpec:
    """Prompt asking for ``n_ideas`` one-line optimization ideas."""
    if n_ideas < 1:
        raise ValueError("n_ideas must be >= 1")
    text = (
        f"{_problem_statement(task)}\n"
        "\n"
        "## Original program\n"
        f"{_code_block(task.source_code)}\n"
        "\n"
        f"Propose {n_ideas} distinct optimization ideas for this program. "
        f"Reply with one idea per line, numbered 1 to {n_ideas}, and keep "
        "each idea to a single sentence.\n"
    )
    return PromptSpec(role=ROLE_BRAINSTORM, text=text, temperature=temperature)


def build_mutation_prompt(task, seed, temperature: float = 0.8) -> PromptSpec:
    """Prompt asking to improve one program (the task itself or a solution)."""
    parts = [
        _problem_statement(task),
        "",
        "## Original program",
        _code_block(task.source_code),
    ]
    if seed.source_id is not None:
        parts += ["", "## Current solution to improve", _code_block(seed.seed_code)]
        ask = "Improve the current solution so it runs faster while preserving behavior."
    else:
        ask = "Rewrite the program so it runs faster while preserving behavior."
    if seed.idea:
        parts += ["", "## Optimization idea", seed.idea.strip()]
    parts += ["", f"{ask} Reply with the complete program in a single fenced code block.", ""]
    return PromptSpec(role=ROLE_OPTIMIZE, text="\n".join(parts), temperature=temperature)


def build_crossover_prompt(task, seed, temperature: float = 0.8) -> PromptSpec:
    """Prompt asking to improve a solution using inspiration programs."""
    if not seed.inspirations:
        raise ValueError("crossover prompt requires at least one inspiration")
    parts = [
        _problem_statement(task),
        "",
        "## Original program",
        _code_block(task.source_code),
        "",
        "## Inspiration solutions",
    ]
    for rank, rec in enumerate(seed.inspirations, start=1):
        parts += [
            f"### Inspiration {rank} (speedup {rec.objective:.4f}x)",
            _code_block(rec.code),
        ]
    parts += ["", "## Solution to modify", _code_block(seed.seed_code)]
    if seed.idea:
        parts += ["", "## Optimization idea", seed.idea.strip()]
    parts += [
        "",
        "Combine useful techniques from the inspirations to make the solution "
        "to modify run faster while preserving behavior. Reply with the "
        "complete program in a single fenced code block.",
        "",
    ]
    return PromptSpec(role=ROLE_OPTIMIZE, text="\n".join(parts), temperature=temperature)


def build_fix_prompt(task, broken_code: str, error_summary: str, temperature: float = 0.8) -> PromptSpec:
    """Prompt asking to repair a broken candidate given its error output."""
    text = (
        f"{_problem_statement(task)}\n"
        "\n"
        "## Original program\n"
        f"{_code_block(task.source_code)}\n"
        "\n"
        "## Broken candidate\n"
        f"{_code_block(broken_code)}\n"
        "\n"
        "## Error output\n"
        f"{_code_block(error_summary)}\n"
        "\n"
        "Fix the candidate so it runs correctly while keeping it fast. Reply "
        "with the complete corrected program in a single fenced code block.\n"
    )
    return PromptSpec(role=ROLE_FIX, text=text, temperature=temperature)


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_IDEA_LINE_RE = re.compile(r"^\s*(?:\d+[.):]\s*|[-*]\s+)(.+?)\s*$")


def extract_code(response_text: str) -> str:
    """Pull the candidate program out of a model response.

    Takes the content of the last fenced code block; a response with no
    fences is treated as bare code. A single trailing newline added by the
    fence is stripped so round-trips stay stable.
    """
    blocks = _FENCE_RE.findall(response_text)
    if not blocks:
        return response_text
    block = blocks[-1]
    return block[:-1] if block.endswith("\n") else block


def parse_ideas(response_text: str, n_ideas: int) -> list[str]:
    """Parse numbered or bulleted idea lines, padding or truncating to n."""
    ideas = []
    for line in response_text.splitlines():
        m = _IDEA_LINE_RE.match(line)
        if m:
            ideas.append(m.group(1))
        elif line.strip() and not ideas:
            # Tolerate a response that skips numbering entirely.
            ideas.append(line.strip())
    ideas = ideas[:n_ideas]
    while len(ideas) < n_ideas:
        ideas.append(ideas[-1] if ideas else "optimize the program")
    return ideas


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScriptEntry:
    """One scripted response for the mock backend."""

    role: str
    response_text: str
    prompt_hash: str = "*"
    ordinal: int | None = None
    input_tokens: int = 0
    output_tokens: int = 0


class MockScriptMiss(AgentError):
    """No scripted entry matched an invocation; scripts must be exhaustive."""


class MockBackend:
    """Deterministic backend that replays responses from a script.

    Entries are matched in precedence order:

    1. exact ``(role, prompt_hash, ordinal)`` where the ordinal counts
       invocations of that particular (role, hash) pair from zero,
    2. ``(role, prompt_hash)`` with no ordinal, reused for every repeat,
    3. wildcard entries with ``prompt_hash == "*"`` keyed by ordinal, where
       the ordinal counts every invocation of that role across the run.

    A miss raises instead of improvising, so a scripted run either follows
    the script or fails loudly.
    """

    kind = "mock"

    def __init__(
        self,
        entries: list[ScriptEntry],
        path: str | None = None,
        model: str = "mock",
    ):
        self.path = path
        self.model = model
        self._exact: dict[tuple[str, str, int], ScriptEntry] = {}
        self._by_hash: dict[tuple[str, str], ScriptEntry] = {}
        self._wildcard: dict[tuple[str, int], ScriptEntry] = {}
        for entry in entries:
            if entry.role not in ROLES:
                raise ValueError(f"script entry has unknown role {entry.role!r}")
            if entry.prompt_hash == "*":
                if entry.ordinal is None:
                    raise ValueError("wildcard script entries need an ordinal")
                key = (entry.role, entry.ordinal)
                if key in self._wildcard:
                    raise ValueError(f"duplicate wildcard entry for {key}")
                self._wildcard[key] = entry
            elif entry.ordinal is not None:
                self._exact[(entry.role, entry.prompt_hash, entry.ordinal)] = entry
            else:
                self._by_hash[(entry.role, entry.prompt_hash)] = entry
        self._lock = threading.Lock()
        self._hash_counts: dict[tuple[str, str], int] = {}
        self._role_counts: dict[str, int] = {}

    @classmethod
    def load(cls, path: str, model: str = "mock") -> "MockBackend":
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        entries = [
            ScriptEntry(
                role=e["role"],
                response_text=e["response_text"],
                prompt_hash=e.get("prompt_hash", "*"),
                ordinal=e.get("ordinal"),
                input_tokens=e.get("input_tokens", 0),
                output_tokens=e.get("output_tokens", 0),
            )
            for e in data["entries"]
        ]
        return cls(entries, path=path, model=model)

    def invoke(self, spec: PromptSpec) -> tuple[str, TokenUsage]:
        h = prompt_hash(spec)
        with self._lock:
            hash_ordinal = self._hash_counts.get((spec.role, h), 0)
            self._hash_counts[(spec.role, h)] = hash_ordinal + 1
            role_ordinal = self._role_counts.get(spec.role, 0)
            self._role_counts[spec.role] = role_ordinal + 1
        entry = (
            self._exact.get((spec.role, h, hash_ordinal))
            or self._by_hash.get((spec.role, h))
            or self._wildcard.get((spec.role, role_ordinal))
        )
        if entry is None:
            raise MockScriptMiss(
                f"no scripted response for role={spec.role} hash={h[:12]} "
                f"hash_ordinal={hash_ordinal} role_ordinal={role_ordinal}"
            )
        usage = TokenUsage(entry.input_tokens, entry.output_tokens)
        return entry.response_text, usage


class RemoteBackend:
    """OpenAI-compatible chat completion client with bounded retries."""

    kind = "remote"

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        timeout_s: float = 120.0,
        max_retries: int = 2,
        session=None,
        sleep=time.sleep,
    ):
        if session is None:
            import requests

            session = requests.Session()
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self._session = session
        self._sleep = sleep

    def invoke(self, spec: PromptSpec) -> tuple[str, TokenUsage]:
        payload = {
            "model": self.model,
            "temperature": spec.temperature,
            "messages": [{"role": "user", "content": spec.text}],
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = self._session.post(
                    f"{self.base_url}/chat/completions",
                    json=payload,
                    headers=headers,
                    timeout=self.timeout_s,
                )
                resp.raise_for_status()
                body = resp.json()
                text = body["choices"][0]["message"]["content"]
                usage = body.get("usage") or {}
                if "prompt_tokens" in usage and "completion_tokens" in usage:
                    return text, TokenUsage(
                        int(usage["prompt_tokens"]), int(usage["completion_tokens"])
                    )
                return text, estimate_usage(spec.text, text)
            except Exception as exc:  # noqa: BLE001 - transport errors vary by stack
                last_error = exc
                if attempt < self.max_retries:
                    self._sleep(min(2.0**attempt, 8.0))
        raise AgentError(f"backend request failed after retries: {last_error}")


@dataclass
class AgentPool:
    """Role-to-backend binding used by the controllers.

    All roles may share one backend; a separate (typically cheaper) model
    for the fixer role is configured by binding a different backend to it.
    """

    optimize: object
    brainstorm: object | None = None
    fix: object | None = None
    models: dict[str, str] = field(default_factory=dict)

    def backend_for(self, role: str):
        if role == ROLE_OPTIMIZE:
            return self.optimize
        if role == ROLE_BRAINSTORM:
            return self.brainstorm or self.optimize
        if role == ROLE_FIX:
            return self.fix or self.optimize
        raise ValueError(f"unknown agent role: {role!r}")

    def model_for(self, role: str) -> str:
        if role in self.models:
            return self.models[role]
        backend = self.backend_for(role)
        return getattr(backend, "model", "mock")
