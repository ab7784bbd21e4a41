"""Deterministic stand-in LLM for desk-scale experiments and stress tests.

The token soup backend answers agent prompts by sampling tokens from a
synthetic landscape: candidates are code blocks containing random feature
tokens (and sometimes a breakage token), and fix responses repair breakage
tokens with some probability. Paired with the synthetic evaluator this
yields full runs with realistic success, failure, and fix dynamics, without
any network or scripting effort.
"""

from __future__ import annotations

import random
import re
import threading

from .agents import ROLE_BRAINSTORM, ROLE_FIX, PromptSpec, TokenUsage, _FENCE_RE
from .evaluation import SyntheticLandscape

_IDEA_COUNT_RE = re.compile(r"Propose (\d+) distinct")


class TokenSoupBackend:
    """Backend that writes candidates by sampling landscape tokens."""

    kind = "synthetic_llm"

    def __init__(
        self,
        landscape: SyntheticLandscape,
        seed: int,
        *,
        feature_prob: float = 0.5,
        break_prob: float = 0.3,
        fix_prob: float = 0.6,
        model: str = "token-soup",
    ):
        self.landscape = landscape
        self.model = model
        self.feature_prob = feature_prob
        self.break_prob = break_prob
        self.fix_prob = fix_prob
        self._rng = random.Random(seed)
        self._lock = threading.Lock()

    def invoke(self, spec: PromptSpec) -> tuple[str, TokenUsage]:
        with self._lock:
            if spec.role == ROLE_BRAINSTORM:
                text = self._ideas(spec.text)
            elif spec.role == ROLE_FIX:
                text = self._fix(spec.text)
            else:
                text = self._candidate()
        usage = TokenUsage(
            input_tokens=max(1, len(spec.text) // 4),
            output_tokens=max(1, len(text) // 4),
        )
        return text, usage

    def _ideas(self, prompt_text: str) -> str:
        match = _IDEA_COUNT_RE.search(prompt_text)
        count = int(match.group(1)) if match else 1
        tokens = sorted(self.landscape.feature_factors) or ["nothing"]
        lines = [
            f"{i + 1}. try {self._rng.choice(tokens)}" for i in range(count)
        ]
        return "\n".join(lines)

    def _candidate(self) -> str:
        lines = ["# generated candidate"]
        for token in sorted(self.landscape.feature_factors):
            if self._rng.random() < self.feature_prob:
                lines.append(f"apply({token!r})")
        breakage = sorted(self.landscape.breakage_rules)
        if breakage and self._rng.random() < self.break_prob:
            lines.append(f"apply({self._rng.choice(breakage)!r})")
        code = "\n".join(lines)
        return f"Here is an improved version.\n```python\n{code}\n```"

    def _fix(self, prompt_text: str) -> str:
        # The fix prompt carries three fenced blocks: the original program,
        # the broken candidate, and the error output.
        blocks = _FENCE_RE.findall(prompt_text)
        broken = blocks[1] if len(blocks) > 1 else ""
        code = broken.rstrip("\n")
        for token, fix in sorted(self.landscape.breakage_rules.items()):
            if token in code and fix not in code:
                if self._rng.random() < self.fix_prob:
                    code += f"\napply({fix!r})"
        return f"Patched the failure.\n```python\n{code}\n```"
