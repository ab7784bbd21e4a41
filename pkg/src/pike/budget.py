"""Query budget accounting shared by every agent in a run.

The budget is denominated in queries: each model call by any agent costs
exactly one query, and a run may never issue more calls than its budget.
Callers reserve a query before invoking the model and commit the token
usage afterwards, so the cap holds even when the invocation itself fails.
Dollar cost is tracked alongside for reporting and never gates anything.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .agents import ROLES, PricingEntry, TokenUsage, usage_cost


class BudgetError(Exception):
    """Raised on invalid ledger operations, never on plain exhaustion."""


@dataclass
class AgentSpend:
    """Per-role share of the run's spend."""

    queries: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    dollars: float = 0.0

    def to_dict(self) -> dict:
        return {
            "queries": self.queries,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "dollars": self.dollars,
        }


class BudgetLedger:
    """Thread-safe reserve/commit counter for a run's query budget."""

    def __init__(self, query_budget: int):
        if query_budget < 0:
            raise BudgetError("query budget must be non-negative")
        self.query_budget = query_budget
        self._lock = threading.Lock()
        self._queries_used = 0
        self._dollars = 0.0
        self._per_agent: dict[str, AgentSpend] = {role: AgentSpend() for role in ROLES}

    @property
    def queries_used(self) -> int:
        with self._lock:
            return self._queries_used

    @property
    def dollars_used(self) -> float:
        with self._lock:
            return self._dollars

    def remaining(self) -> int:
        with self._lock:
            return self.query_budget - self._queries_used

    def try_reserve(self, role: str) -> bool:
        """Atomically claim one query for ``role``; False when exhausted."""
        self._check_role(role)
        with self._lock:
            if self._queries_used >= self.query_budget:
                return False
            self._queries_used += 1
            self._per_agent[role].queries += 1
            return True

    def commit(self, role: str, usage: TokenUsage, pricing: PricingEntry) -> float:
        """Record token usage for a reserved query; returns its dollar cost."""
        self._check_role(role)
        cost = usage_cost(usage, pricing)
        with self._lock:
            spend = self._per_agent[role]
            if spend.queries <= 0:
                raise BudgetError(f"commit without reserve for role {role}")
            spend.input_tokens += usage.input_tokens
            spend.output_tokens += usage.output_tokens
            spend.dollars += cost
            self._dollars += cost
        return cost

    def charge_query(self, role: str, usage: TokenUsage, pricing: PricingEntry) -> bool:
        """Fused reserve plus commit for callers that already hold the usage."""
        if not self.try_reserve(role):
            return False
        self.commit(role, usage, pricing)
        return True

    def totals(self) -> tuple[int, float]:
        """Consistent (queries_used, dollars_used) pair under one lock."""
        with self._lock:
            return self._queries_used, self._dollars

    def per_agent(self) -> dict[str, AgentSpend]:
        with self._lock:
            return {
                role: AgentSpend(**s.to_dict()) for role, s in self._per_agent.items()
            }

    @staticmethod
    def _check_role(role: str) -> None:
        if role not in ROLES:
            raise BudgetError(f"unknown agent role: {role!r}")
