"""Structured records of checked inequalities."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


def ratio(left: float, right: float) -> float:
    """``left / right`` with ``0/0 = 0`` and ``x/0 = inf``."""
    if right == 0:
        return 0.0 if left == 0 else math.inf
    return left / right


@dataclass(frozen=True)
class EstimateReport:
    """One checked inequality ``left <= tolerance_factor * right``.

    ``tolerance_factor = inf`` marks an implicit-constant estimate: only
    finiteness of the empirical constant is required.
    """

    name: str
    left: float
    right: float
    empirical_constant: float
    passed: bool
    tolerance_factor: float = 1.0
    context: dict = field(default_factory=dict)
    flags: tuple = ()

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        flags = f" [{', '.join(self.flags)}]" if self.flags else ""
        return (f"{status} {self.name}: left={self.left:.6g} right={self.right:.6g} "
                f"C={self.empirical_constant:.6g} factor={self.tolerance_factor:g}{flags}")

    def row(self) -> dict:
        return {
            "name": self.name,
            "left": self.left,
            "right": self.right,
            "empirical_constant": self.empirical_constant,
            "tolerance_factor": self.tolerance_factor,
            "passed": self.passed,
            "flags": ";".join(self.flags),
            "context": json.dumps(self.context, sort_keys=True, default=_jsonable),
        }


def _jsonable(x):
    try:
        return float(x)
    except (TypeError, ValueError):
        return str(x)


def make_report(name: str, left: float, right: float, tolerance_factor: float = 1.0,
                context: dict | None = None, flags=(), passed: bool | None = None) -> EstimateReport:
    left, right = float(left), float(right)
    c = ratio(left, right)
    if passed is None:
        if not (math.isfinite(left) and math.isfinite(right)):
            passed = False
        elif math.isinf(tolerance_factor):
            passed = math.isfinite(c)
        else:
            passed = left <= tolerance_factor * right or left == 0.0
    return EstimateReport(name, left, right, c, bool(passed), float(tolerance_factor),
                          dict(context or {}), tuple(flags))
