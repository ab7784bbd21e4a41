"""Numerical equivalence between a gold output and a candidate output.

A candidate is valid when every element satisfies the tolerance condition

    |gold_i - other_i| <= atol + rtol * |other_i|

with both tolerances defaulting to 0.01. Outputs may be tensors, plain
numbers, or nested lists/tuples/dicts of those; tensors are handled
through their own arithmetic methods so this module never imports the ML
runtime itself. Mismatched shapes, lengths, or key sets are an automatic
fail. The condition is applied literally, so non-finite values never pass.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass


class CorrectnessTypeError(Exception):
    """An output is not numeric and cannot be compared."""


@dataclass(frozen=True)
class CorrectnessReport:
    """Verdict of one comparison.

    ``max_violation`` is the largest elementwise excess over the bound,
    |gold - other| - (atol + rtol * |other|), reported only when the
    comparison failed elementwise with a finite excess. Structural
    failures (shapes, lengths, keys, non-finite values) leave it None and
    explain themselves in ``detail``.
    """

    passed: bool
    max_violation: float | None = None
    detail: str | None = None


def _fail(detail: str, violation: float | None = None) -> CorrectnessReport:
    return CorrectnessReport(passed=False, max_violation=violation, detail=detail)


def _is_tensor(value) -> bool:
    # Duck-typed: torch tensors and numpy arrays both carry a shape and
    # elementwise arithmetic, which is all the comparison needs.
    return hasattr(value, "shape") and hasattr(value, "dtype")


def _compare_tensors(gold, other, atol: float, rtol: float) -> CorrectnessReport:
    if tuple(gold.shape) != tuple(other.shape):
        return _fail(
            f"output shape mismatch: gold {tuple(gold.shape)} vs "
            f"candidate {tuple(other.shape)}"
        )
    diff = abs(gold - other)
    bound = atol + rtol * abs(other)
    violation = diff - bound
    if violation.shape == () or 0 not in tuple(violation.shape):
        worst = float(violation.max())
    else:
        return CorrectnessReport(passed=True)
    if math.isnan(worst) or math.isinf(worst):
        return _fail("non-finite values in output comparison")
    if worst <= 0:
        return CorrectnessReport(passed=True)
    return _fail(
        f"output mismatch: worst element exceeds tolerance by {worst:.6g}",
        violation=worst,
    )


def _compare_scalars(gold, other, atol: float, rtol: float) -> CorrectnessReport:
    diff = abs(float(gold) - float(other))
    bound = atol + rtol * abs(float(other))
    violation = diff - bound
    if math.isnan(violation) or math.isinf(violation):
        return _fail("non-finite values in output comparison")
    if diff <= bound:
        return CorrectnessReport(passed=True)
    return _fail(
        f"output mismatch: exceeds tolerance by {violation:.6g}",
        violation=violation,
    )


def _merge(reports: list[CorrectnessReport]) -> CorrectnessReport:
    if all(r.passed for r in reports):
        return CorrectnessReport(passed=True)
    violations = [r.max_violation for r in reports if r.max_violation is not None]
    detail = next(r.detail for r in reports if not r.passed)
    return _fail(detail, violation=max(violations) if violations else None)


def check_correctness(gold, other, atol: float = 0.01, rtol: float = 0.01) -> CorrectnessReport:
    """Compare a candidate output against the gold output elementwise.

    Raises CorrectnessTypeError when either side is not a number, tensor,
    or nested container of those; callers map that to a runtime error.
    """
    if atol < 0 or rtol < 0:
        raise ValueError("tolerances must be non-negative")
    if gold is None or other is None:
        if gold is None and other is None:
            return CorrectnessReport(passed=True)
        return _fail("one output is missing where the other is not")
    if _is_tensor(gold) or _is_tensor(other):
        if not (_is_tensor(gold) and _is_tensor(other)):
            return _fail("output shape mismatch: tensor compared against non-tensor")
        return _compare_tensors(gold, other, atol, rtol)
    if isinstance(gold, numbers.Real) and isinstance(other, numbers.Real):
        return _compare_scalars(gold, other, atol, rtol)
    if isinstance(gold, (list, tuple)) and isinstance(other, (list, tuple)):
        if len(gold) != len(other):
            return _fail(
                f"output length mismatch: gold {len(gold)} vs candidate {len(other)}"
            )
        if not gold:
            return CorrectnessReport(passed=True)
        return _merge(
            [check_correctness(g, o, atol, rtol) for g, o in zip(gold, other)]
        )
    if isinstance(gold, dict) and isinstance(other, dict):
        if set(gold) != set(other):
            return _fail("output keys mismatch between gold and candidate")
        if not gold:
            return CorrectnessReport(passed=True)
        return _merge(
            [check_correctness(gold[k], other[k], atol, rtol) for k in sorted(gold)]
        )
    comparable = (numbers.Real, list, tuple, dict)
    if isinstance(gold, comparable) and isinstance(other, comparable):
        # Both comparable kinds but not the same kind, e.g. scalar vs list.
        return _fail("output structure mismatch: differing output kinds")
    raise CorrectnessTypeError(
        f"non-numeric outputs: {type(gold).__name__} vs {type(other).__name__}"
    )
