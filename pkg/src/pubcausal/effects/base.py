"""Estimate records and the unadjusted difference-in-means baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ..panel import EffectData

METHODS = ("naive", "psm", "causal_forest", "vaine")
ESTIMATE_COLUMNS = ("method", "treatment", "outcome", "year", "estimate", "n_treated", "n_control", "defined")


@dataclass(frozen=True)
class AteEstimate:
    method: str
    treatment: str
    outcome: str
    year: Optional[int]
    estimate: float
    n_treated: int
    n_control: int
    defined: bool = True
    diagnostics: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.defined and not math.isfinite(self.estimate):
            raise ValueError("a defined estimate must be finite")

    def row(self) -> list:
        est = repr(float(self.estimate)) if self.defined else ""
        return [self.method, self.treatment, self.outcome, "" if self.year is None else self.year,
                est, self.n_treated, self.n_control, int(self.defined)]


def arm_counts(data: EffectData) -> tuple[int, int]:
    n1 = int((data.t == 1).sum())
    return n1, data.n - n1


def undefined(method: str, data: EffectData, reason: str, **diag) -> AteEstimate:
    n1, n0 = arm_counts(data)
    return AteEstimate(method, data.treatment, data.outcome, data.year, math.nan, n1, n0, False,
                       {"reason": reason, **diag})


def naive_ate(data: EffectData) -> AteEstimate:
    """Difference of arm means without adjustment."""
    n1, n0 = arm_counts(data)
    if n1 == 0 or n0 == 0:
        return undefined("naive", data, "empty arm")
    m1 = data.t == 1
    est = float(np.mean(data.y[m1]) - np.mean(data.y[~m1]))
    return AteEstimate("naive", data.treatment, data.outcome, data.year, est, n1, n0)
