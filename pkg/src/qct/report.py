"""Verification reports shared by every identity checker."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Callable

from .multipoly import BudgetExceeded

PASS = "pass"
FAIL = "fail"
NO_CLAIM = "no-claim"
BUDGET = "budget-exceeded"
HYPOTHESIS = "hypothesis-violated"


@dataclass
class Outcome:
    """What a checker body returns; `verified` wraps it into a report."""

    passed: bool | None
    detail: str = ""
    checks: dict[str, bool] = field(default_factory=dict)
    lhs: Any = None
    rhs: Any = None
    status: str | None = None


@dataclass
class VerifyReport:
    """Result of checking one identity at one parameter point.

    ``passed`` is None when the identity makes no claim at this point
    (hypothesis not satisfied) or the term budget ran out.
    """

    identity: str
    params: dict[str, Any]
    passed: bool | None
    status: str
    millis: float
    detail: str = ""
    checks: dict[str, bool] = field(default_factory=dict)
    lhs: str | None = None
    rhs: str | None = None
    sides: tuple | None = field(default=None, repr=False, compare=False)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "identity": self.identity,
            "params": {k: _jsonable(v) for k, v in self.params.items()},
            "pass": self.passed,
            "status": self.status,
            "millis": round(self.millis, 3),
        }
        if self.detail:
            out["detail"] = self.detail
        if self.checks:
            out["checks"] = self.checks
        if self.passed is False and self.lhs is not None:
            out["lhs"] = self.lhs
            out["rhs"] = self.rhs
        return out


def _jsonable(v):
    if isinstance(v, (int, str, bool)) or v is None:
        return v
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return str(v)


def verified(identity: str, params: dict[str, Any], body: Callable[[], Outcome]) -> VerifyReport:
    """Run a checker body, timing it and turning budget aborts into a status."""
    t0 = time.perf_counter()
    try:
        out = body()
    except BudgetExceeded as exc:
        return VerifyReport(identity, params, None, BUDGET, (time.perf_counter() - t0) * 1000, str(exc))
    millis = (time.perf_counter() - t0) * 1000
    if out.status is not None:
        status = out.status
    elif out.passed is None:
        status = NO_CLAIM
    else:
        status = PASS if out.passed else FAIL
    lhs = rhs = None
    if out.passed is False:
        lhs = None if out.lhs is None else str(out.lhs)
        rhs = None if out.rhs is None else str(out.rhs)
    sides = (out.lhs, out.rhs) if out.lhs is not None else None
    return VerifyReport(identity, params, out.passed, status, millis, out.detail, dict(out.checks), lhs, rhs, sides)
